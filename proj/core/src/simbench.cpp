#include "repu/simbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "fmt_double.hpp"

namespace repu {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double pi = std::numbers::pi;

double steps(double s, std::span<const double> h, std::span<const double> t) {
  double v = 0.0;
  for (size_t i = 0; i < h.size(); ++i)
    if (s >= t[i]) v += h[i];
  return v;
}

double nonneg(double v) {
  if (v < 0) throw InvalidArgument("model covariates must lie in [0, 1]");
  return v;
}

int lattice_side(int d, int total) {
  int m = static_cast<int>(std::llround(std::pow(static_cast<double>(total), 1.0 / d)));
  long check = 1;
  for (int j = 0; j < d; ++j) check *= m;
  if (m < 2 || check != total)
    throw InvalidArgument("lattice needs a perfect " + std::to_string(d) + "-th power >= 2^d, got " +
                          std::to_string(total));
  return m;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double pos = q * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(pos));
  size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

double SimModel::f0(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != d) throw InvalidArgument("model " + name + " takes " + std::to_string(d) + " inputs");
  for (double v : x)
    if (!(v >= 0.0)) throw InvalidArgument("model " + name + ": inputs must be non-negative");
  static const double uh[] = {1, 2, 2}, ut[] = {0.2, 0.6, 1.0};
  static const double bh[] = {1, 2, 2, 1.5, 0.5, 1}, bt[] = {0.2, 0.6, 1.0, 1.3, 1.7, 1.9};
  switch (id) {
    case ModelId::u_linear: return 2.0 * x[0];
    case ModelId::u_exp: return std::exp(2.0 * x[0]);
    case ModelId::u_step: return steps(x[0], uh, ut);
    case ModelId::u_constant: return 3.0;
    case ModelId::u_wave: return 4.0 * x[0] + 2.0 * x[0] * std::sin(4.0 * pi * x[0]);
    case ModelId::b_polynomial: return 10.0 / std::pow(2.0, 0.75) * std::pow(nonneg(x[0] + x[1]), 0.75);
    case ModelId::b_concave: return 1.0 + 3.0 * x[0] * (1.0 - std::exp(-3.0 * x[1]));
    case ModelId::b_step: return steps(x[0] + x[1], bh, bt);
    case ModelId::b_partial: return 10.0 * std::pow(nonneg(x[1]), 8.0 / 3.0);
    case ModelId::b_constant: return 3.0;
    case ModelId::b_wave: {
      double s = x[0] + x[1];
      return 5.0 * s + 3.0 * s * std::sin(pi * s);
    }
    case ModelId::b_model_g: return 2.0 * std::sin(2.0 * pi * x[0]) + 4.0 * std::pow(nonneg(x[1]), 4.0 / 3.0);
  }
  return 0.0;
}

const std::vector<SimModel>& all_models() {
  static const std::vector<SimModel> models{
      {ModelId::u_linear, "U-Linear", 1, true},       {ModelId::u_exp, "U-Exp", 1, true},
      {ModelId::u_step, "U-Step", 1, true},           {ModelId::u_constant, "U-Constant", 1, true},
      {ModelId::u_wave, "U-Wave", 1, false},          {ModelId::b_polynomial, "B-Polynomial", 2, true},
      {ModelId::b_concave, "B-Concave", 2, true},     {ModelId::b_step, "B-Step", 2, true},
      {ModelId::b_partial, "B-Partial", 2, true},     {ModelId::b_constant, "B-Constant", 2, true},
      {ModelId::b_wave, "B-Wave", 2, false},          {ModelId::b_model_g, "B-ModelG", 2, false},
  };
  return models;
}

const SimModel& model_by_name(const std::string& name) {
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  for (const auto& m : all_models())
    if (m.name == name || lower(m.name) == lower(name)) return m;
  std::string known;
  for (const auto& m : all_models()) known += (known.empty() ? "" : ", ") + m.name;
  throw InvalidArgument("unknown model '" + name + "' (" + known + ")");
}

Design parse_design(const std::string& s) {
  if (s == "lattice") return Design::lattice;
  if (s == "uniform") return Design::uniform;
  throw InvalidArgument("unknown design '" + s + "' (lattice|uniform)");
}

MatrixXd lattice_points(int d, int total) {
  const int m = lattice_side(d, total);
  MatrixXd X(total, d);
  for (int i = 0; i < total; ++i) {
    int rem = i;
    for (int j = d - 1; j >= 0; --j) {
      X(i, j) = static_cast<double>(rem % m) / (m - 1);
      rem /= m;
    }
  }
  return X;
}

Dataset generate(const SimModel& model, int n, std::uint64_t seed, Design design) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  std::mt19937_64 rng(seed);
  Dataset data;
  if (design == Design::lattice) {
    data.X = lattice_points(model.d, n);
  } else {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    data.X.resize(n, model.d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < model.d; ++j) data.X(i, j) = u(rng);
  }
  std::normal_distribution<double> noise(0.0, model.noise_sd);
  data.y.resize(n);
  std::vector<double> x(static_cast<size_t>(model.d));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < model.d; ++j) x[static_cast<size_t>(j)] = data.X(i, j);
    data.y(i) = model.f0(x) + noise(rng);
  }
  data.generator = model.name + (design == Design::lattice ? "/lattice" : "/uniform");
  data.seed = seed;
  return data;
}

MetricsRow metrics(const Predictor& predictor, const SimModel& model, int total, std::uint64_t seed) {
  const int m = lattice_side(model.d, total);
  MatrixXd X = lattice_points(model.d, total);
  VectorXd pred = predictor.predict_batch(X);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, model.noise_sd);
  MetricsRow row;
  row.model = model.name;
  std::vector<double> x(static_cast<size_t>(model.d));
  double se = 0, se0 = 0, ae = 0;
  for (int i = 0; i < total; ++i) {
    for (int j = 0; j < model.d; ++j) x[static_cast<size_t>(j)] = X(i, j);
    double f = model.f0(x);
    double y = f + noise(rng);
    double r = pred(i) - f;
    se += (y - pred(i)) * (y - pred(i));
    se0 += r * r;
    ae += std::abs(r);
  }
  row.mse = se / total;
  row.mse_f0 = se0 / total;
  row.l1 = ae / total;
  row.l2 = std::sqrt(row.mse_f0);
  // Forward differences along each axis of the lattice (last axis varies fastest).
  const double h = 1.0 / (m - 1);
  for (int j = 0; j < model.d; ++j) {
    int stride = 1;
    for (int k = model.d - 1; k > j; --k) stride *= m;
    double neg = 0.0;
    int pairs = 0;
    for (int i = 0; i < total; ++i) {
      if ((i / stride) % m == m - 1) continue;
      double slope = (pred(i + stride) - pred(i)) / h;
      neg += slope < 0 ? -slope : 0.0;
      ++pairs;
    }
    row.violation.push_back(neg / pairs);
  }
  return row;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

namespace {

struct Job {
  int rep;
  std::string method;
  double lambda;
  bool sweep;
};

std::vector<MetricsRow> run_jobs(const ReplicateSpec& spec, const std::vector<Job>& jobs) {
  const SimModel& model = model_by_name(spec.model);
  const int total = spec.test_points > 0 ? spec.test_points : (model.d == 1 ? 100 : 100 * 100);
  std::vector<MetricsRow> rows(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), spec.jobs, [&](int k) {
    const Job& job = jobs[static_cast<size_t>(k)];
    const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(job.rep);
    MetricsRow row;
    try {
      Dataset data = generate(model, spec.n, seed, spec.design);
      EstimatorConfig cfg = spec.estimator;
      cfg.train.seed = seed;
      if (job.sweep) {
        cfg.lambda.kind = LambdaRule::Kind::values;
        cfg.lambda.values = {job.lambda};
      }
      FitResult fit = fit_method(job.method, data, cfg);
      row = metrics(*fit.predictor, model, total, seed ^ 0x7e57da7aULL);
      row.lambda = fit.lambda.empty() ? 0.0 : fit.lambda.front();
    } catch (const std::exception& e) {
      row.model = model.name;
      row.ok = false;
      row.error = e.what();
      row.lambda = job.sweep ? job.lambda : 0.0;
    }
    row.method = job.method;
    row.n = spec.n;
    row.rep = job.rep;
    row.seed = seed;
    rows[static_cast<size_t>(k)] = std::move(row);
  });
  return rows;
}

}  // namespace

std::vector<MetricsRow> replicate(const ReplicateSpec& spec) {
  if (spec.reps < 1) throw InvalidArgument("reps must be >= 1");
  if (spec.methods.empty()) throw InvalidArgument("no methods requested");
  std::vector<Job> jobs;
  for (int r = 0; r < spec.reps; ++r)
    for (const auto& m : spec.methods) jobs.push_back({r, m, 0.0, false});
  return run_jobs(spec, jobs);
}

std::vector<double> default_lambda_grid(int n, int count) {
  if (count < 1) throw InvalidArgument("grid needs at least one point");
  const double top = 3.0 * std::log(static_cast<double>(n));
  if (count == 1) return {0.0};
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(top * i / (count - 1));
  return g;
}

std::vector<SummaryRow> lambda_sweep(const ReplicateSpec& spec, std::span<const double> grid,
                                     std::vector<MetricsRow>* raw) {
  if (grid.empty()) throw InvalidArgument("empty lambda grid");
  if (spec.reps < 1) throw InvalidArgument("reps must be >= 1");
  std::vector<Job> jobs;
  for (double lam : grid)
    for (int r = 0; r < spec.reps; ++r) jobs.push_back({r, "pdir", lam, true});
  auto rows = run_jobs(spec, jobs);
  if (raw) *raw = rows;
  return summarize(rows);
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows) {
  struct Acc {
    SummaryRow s;
    std::vector<double> mse, l1, l2;
  };
  std::vector<Acc> groups;
  std::map<std::tuple<std::string, int, std::string, double>, size_t> index;
  for (const auto& r : rows) {
    auto key = std::make_tuple(r.model, r.n, r.method, r.lambda);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      Acc a;
      a.s.model = r.model;
      a.s.method = r.method;
      a.s.n = r.n;
      a.s.lambda = r.lambda;
      groups.push_back(std::move(a));
    }
    Acc& a = groups[it->second];
    ++a.s.reps;
    if (!r.ok) {
      ++a.s.failed;
      continue;
    }
    a.mse.push_back(r.mse);
    a.l1.push_back(r.l1);
    a.l2.push_back(r.l2);
  }
  std::vector<SummaryRow> out;
  for (auto& a : groups) {
    mean_sd(a.mse, a.s.mse_mean, a.s.mse_sd);
    mean_sd(a.l1, a.s.l1_mean, a.s.l1_sd);
    mean_sd(a.l2, a.s.l2_mean, a.s.l2_sd);
    a.s.l1_lo = quantile(a.l1, 0.05);
    a.s.l1_hi = quantile(a.l1, 0.95);
    a.s.l2_lo = quantile(a.l2, 0.05);
    a.s.l2_hi = quantile(a.l2, 0.95);
    out.push_back(a.s);
  }
  return out;
}

std::string metrics_csv_header() { return "model,n,method,rep,seed,lambda,mse,mse_f0,l1,l2,viol_1,viol_2,ok,error"; }

std::string to_csv(const std::vector<MetricsRow>& rows) {
  std::string out = metrics_csv_header() + "\n";
  for (const auto& r : rows) {
    out += r.model + "," + std::to_string(r.n) + "," + r.method + "," + std::to_string(r.rep) + "," +
           std::to_string(r.seed) + "," + format_double(r.lambda) + ",";
    if (r.ok) {
      out += format_double(r.mse) + "," + format_double(r.mse_f0) + "," + format_double(r.l1) + "," +
             format_double(r.l2) + ",";
      out += (r.violation.size() > 0 ? format_double(r.violation[0]) : "") + ",";
      out += (r.violation.size() > 1 ? format_double(r.violation[1]) : "") + ",";
    } else {
      out += ",,,,,,";
    }
    out += std::string(r.ok ? "1" : "0") + "," + csv_escape(r.error) + "\n";
  }
  return out;
}

std::vector<MetricsRow> parse_metrics_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("model,n,method", 0) != 0)
    throw FormatError("results CSV: unexpected header");
  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    // error text is last and may be quoted; split off the first 13 fields
    std::vector<std::string> f;
    size_t pos = 0;
    for (int i = 0; i < 13; ++i) {
      size_t c = line.find(',', pos);
      if (c == std::string::npos) throw FormatError("results CSV line " + std::to_string(lineno) + ": too few fields");
      f.push_back(line.substr(pos, c - pos));
      pos = c + 1;
    }
    std::string err = line.substr(pos);
    if (err.size() >= 2 && err.front() == '"') err = err.substr(1, err.size() - 2);
    MetricsRow r;
    try {
      r.model = f[0];
      r.n = std::stoi(f[1]);
      r.method = f[2];
      r.rep = std::stoi(f[3]);
      r.seed = std::stoull(f[4]);
      r.lambda = std::stod(f[5]);
      r.ok = f[12] == "1";
      if (r.ok) {
        r.mse = std::stod(f[6]);
        r.mse_f0 = std::stod(f[7]);
        r.l1 = std::stod(f[8]);
        r.l2 = std::stod(f[9]);
        if (!f[10].empty()) r.violation.push_back(std::stod(f[10]));
        if (!f[11].empty()) r.violation.push_back(std::stod(f[11]));
      }
    } catch (const std::exception&) {
      throw FormatError("results CSV line " + std::to_string(lineno) + ": bad number");
    }
    r.error = err;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "model,n,method,lambda,reps,failed,mse_mean,mse_sd,l1_mean,l1_sd,l2_mean,l2_sd,l1_q05,l1_q95,l2_q05,l2_q95\n";
  for (const auto& s : rows) {
    out += s.model + "," + std::to_string(s.n) + "," + s.method + "," + format_double(s.lambda) + "," +
           std::to_string(s.reps) + "," + std::to_string(s.failed);
    for (double v : {s.mse_mean, s.mse_sd, s.l1_mean, s.l1_sd, s.l2_mean, s.l2_sd, s.l1_lo, s.l1_hi, s.l2_lo, s.l2_hi})
      out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

std::string render_table(const std::vector<SummaryRow>& rows) {
  auto cell = [](double m, double sd) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f (%.3f)", m, sd);
    return std::string(buf);
  };
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %5s %-7s %8s %16s %16s %16s %5s\n", "model", "n", "method", "lambda", "MSE",
                "L1", "L2", "R");
  out += line;
  for (const auto& s : rows) {
    std::snprintf(line, sizeof line, "%-14s %5d %-7s %8.3f %16s %16s %16s %5d", s.model.c_str(), s.n,
                  s.method.c_str(), s.lambda, cell(s.mse_mean, s.mse_sd).c_str(), cell(s.l1_mean, s.l1_sd).c_str(),
                  cell(s.l2_mean, s.l2_sd).c_str(), s.reps - s.failed);
    out += line;
    if (s.failed) out += "  (" + std::to_string(s.failed) + " failed)";
    out += "\n";
  }
  return out;
}

std::string plot_data_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "model,method,x,y,band_lo,band_hi,y_l1,band_l1_lo,band_l1_hi\n";
  for (const auto& s : rows)
    out += s.model + "," + s.method + "," + format_double(s.lambda) + "," + format_double(s.l2_mean) + "," +
           format_double(s.l2_lo) + "," + format_double(s.l2_hi) + "," + format_double(s.l1_mean) + "," +
           format_double(s.l1_lo) + "," + format_double(s.l1_hi) + "\n";
  return out;
}

}  // namespace repu
