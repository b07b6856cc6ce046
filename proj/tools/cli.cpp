#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "repu/derivative_compiler.hpp"
#include "repu/estimators.hpp"
#include "repu/poly_compiler.hpp"
#include "repu/serialize.hpp"
#include "repu/simbench.hpp"
#include "repu/training.hpp"

namespace repu::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument("bad number '" + tok + "' in list '" + s + "'");
    }
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

std::vector<std::string> parse_words(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

struct Seeded {
  std::uint64_t value = 0;
  std::uint64_t fallback = 0;
  CLI::Option* opt = nullptr;

  void attach(CLI::App* sc, std::uint64_t default_seed) {
    fallback = default_seed;
    opt = sc->add_option("--seed", value, "RNG seed (falls back to $REPU_LAB_SEED, then " +
                                              std::to_string(default_seed) + ")");
  }
  std::uint64_t resolve() const {
    if (opt && opt->count()) return value;
    if (const char* env = std::getenv("REPU_LAB_SEED")) {
      try {
        return std::stoull(env);
      } catch (const std::exception&) {
        throw InvalidArgument(std::string("REPU_LAB_SEED is not an integer: ") + env);
      }
    }
    return fallback;
  }
};

void write_out(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-")
    out << contents;
  else
    write_file_atomic(path, contents);
}

std::string predictions_csv(const Predictor& pred, int outputs, const Eigen::MatrixXd& X) {
  std::string s;
  for (Eigen::Index j = 0; j < X.cols(); ++j) s += (j ? ",x" : "x") + std::to_string(j + 1);
  if (outputs == 1) {
    s += ",yhat\n";
  } else {
    for (int o = 0; o < outputs; ++o) s += ",s" + std::to_string(o + 1);
    s += "\n";
  }
  std::vector<Eigen::VectorXd> cols;
  if (auto* np = dynamic_cast<const NetworkPredictor*>(&pred)) {
    Eigen::MatrixXd Y = forward_batch(np->net(), X.transpose());
    for (int o = 0; o < outputs; ++o) cols.push_back(Y.row(o).transpose());
  } else {
    cols.push_back(pred.predict_batch(X));
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) s += (j ? "," : "") + fmt_num(X(i, j));
    for (const auto& c : cols) s += "," + fmt_num(c(i));
    s += "\n";
  }
  return s;
}

Eigen::MatrixXd grid_over(const Dataset& data, int per_axis) {
  const int d = data.d();
  long total = 1;
  for (int j = 0; j < d; ++j) total *= per_axis;
  Eigen::MatrixXd X = lattice_points(d, static_cast<int>(total));
  for (int j = 0; j < d; ++j) {
    double lo = data.X.col(j).minCoeff(), hi = data.X.col(j).maxCoeff();
    X.col(j) = (X.col(j).array() * (hi - lo) + lo).matrix();
  }
  return X;
}

struct TrainFlags {
  std::string arch;
  std::string lambda = "logn";
  std::string penalty = "hinge";
  int epochs = 2000;
  double lr = 0.01;
  int batch = 0;

  void attach(CLI::App* sc, bool with_lambda) {
    sc->add_option("--net", arch, "hidden layers, e.g. 32x3:p2 or 16,32,16:p3");
    if (with_lambda) {
      sc->add_option("--lambda", lambda, "float list, logn, <c>*logn or theory:s=<int>")->capture_default_str();
      sc->add_option("--penalty", penalty, "hinge | squared_hinge[:clip=c]")->capture_default_str();
    }
    sc->add_option("--epochs", epochs, "training epochs")->capture_default_str()->check(CLI::NonNegativeNumber);
    sc->add_option("--lr", lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    sc->add_option("--batch-size", batch, "mini-batch size, 0 = full batch")->capture_default_str()->check(CLI::NonNegativeNumber);
  }
  EstimatorConfig config(bool score, std::uint64_t seed) const {
    EstimatorConfig c;
    c.arch = arch.empty() ? (score ? default_score_arch() : default_regression_arch()) : ArchSpec::parse(arch);
    c.lambda = LambdaRule::parse(lambda);
    c.train.epochs = epochs;
    c.train.lr = lr;
    c.train.batch_size = batch;
    c.train.seed = seed;
    c.train.penalty = parse_penalty(penalty);
    return c;
  }
};

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RePU networks: exact polynomial/derivative compilation, DSME and PDIR estimation, simulation tables",
               "repu-lab"};
  app.set_config("--config", "", "TOML/INI file mirroring the flags (section per subcommand)");
  app.set_version_flag("--version", std::string("repu-lab ") + REPU_VERSION);
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "parallel replications (0 = available cores)")->check(CLI::NonNegativeNumber);

  // compile-poly
  auto* cp = app.add_subcommand("compile-poly", "compile a polynomial file into an exact RePU network");
  std::string cp_poly, cp_arch = "horner", cp_out, cp_report;
  int cp_p = 2;
  Seeded cp_seed;
  cp->add_option("--poly", cp_poly, "polynomial file: lines 'a_1 ... a_d coefficient'")->required();
  cp->add_option("--arch", cp_arch, "horner | mhaskar")->capture_default_str();
  cp->add_option("--p", cp_p, "RePU power (>= 2)")->capture_default_str();
  cp->add_option("--out", cp_out, "network file")->required();
  cp->add_option("--report", cp_report, "compile report (JSON)");
  cp_seed.attach(cp, 0);

  // grad-net
  auto* gn = app.add_subcommand("grad-net", "derivative network of a scalar RePU network");
  std::string gn_in, gn_coord = "all", gn_out;
  bool gn_audit = false;
  gn->add_option("--in", gn_in, "source network file")->required();
  gn->add_option("--coord", gn_coord, "1-based coordinate j, or 'all' for the gradient")->capture_default_str();
  gn->add_option("--out", gn_out, "derived network file")->required();
  gn->add_flag("--audit", gn_audit, "structural audit of each derived partial");
  Seeded gn_seed;
  gn_seed.attach(gn, 0);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a network");
  std::string ev_net, ev_x, ev_points, ev_out;
  ev->add_option("--net", ev_net, "network file")->required();
  ev->add_option("--x", ev_x, "one point, comma separated");
  ev->add_option("--points", ev_points, "CSV of points (header x1..xd)");
  ev->add_option("--out", ev_out, "CSV output for --points (default stdout)");
  Seeded ev_seed;
  ev_seed.attach(ev, 0);

  // generate
  auto* ge = app.add_subcommand("generate", "draw a simulation dataset");
  std::string ge_model, ge_out, ge_design = "lattice";
  int ge_n = 256;
  ge->add_option("--model", ge_model, "model id, e.g. U-Linear, B-ModelG")->required();
  ge->add_option("--n", ge_n, "sample size (a perfect d-th power for the lattice)")->capture_default_str();
  ge->add_option("--design", ge_design, "lattice | uniform")->capture_default_str();
  ge->add_option("--out", ge_out, "CSV file")->required();
  Seeded ge_seed;
  ge_seed.attach(ge, 0);

  // train
  auto* tr = app.add_subcommand("train", "train a RePU network with the PDIR or DSME loss");
  std::string tr_loss = "pdir", tr_data, tr_out, tr_history;
  TrainFlags tr_flags;
  tr->add_option("--loss", tr_loss, "pdir | dsme")->capture_default_str();
  tr->add_option("--data", tr_data, "CSV (x1..xd[,y])")->required();
  tr_flags.attach(tr, true);
  tr->add_option("--out", tr_out, "trained network file")->required();
  tr->add_option("--history", tr_history, "per-epoch loss CSV");
  Seeded tr_seed;
  tr_seed.attach(tr, 0);

  // fit
  auto* fi = app.add_subcommand("fit", "fit an estimator and export predictions on a grid");
  std::string fi_method, fi_data, fi_out, fi_net_out;
  int fi_grid = 0;
  TrainFlags fi_flags;
  fi->add_option("--method", fi_method, "pdir | dnr | dsme | pava | block")->required();
  fi->add_option("--data", fi_data, "CSV (x1..xd[,y])")->required();
  fi_flags.attach(fi, true);
  fi->add_option("--grid", fi_grid, "grid points per axis over the data range (default 100, 30 for d >= 3)");
  fi->add_option("--out", fi_out, "predictions CSV")->required();
  fi->add_option("--net-out", fi_net_out, "also save the fitted network");
  Seeded fi_seed;
  fi_seed.attach(fi, 0);

  // simulate
  auto* si = app.add_subcommand("simulate", "replicated simulation of one model");
  std::string si_model, si_methods = "pdir,dnr,block,pava", si_out, si_design = "lattice";
  int si_n = 256, si_reps = 20, si_test = 0;
  TrainFlags si_flags;
  si->add_option("--model", si_model, "model id")->required();
  si->add_option("--n", si_n, "training sample size")->capture_default_str();
  si->add_option("--methods", si_methods, "comma list of pdir,dnr,block,pava")->capture_default_str();
  si->add_option("--reps", si_reps, "replications")->capture_default_str()->check(CLI::PositiveNumber);
  si->add_option("--design", si_design, "lattice | uniform")->capture_default_str();
  si->add_option("--test-points", si_test, "test lattice size T (default 100^d)");
  si_flags.attach(si, true);
  si->add_option("--out", si_out, "results CSV")->required();
  Seeded si_seed;
  si_seed.attach(si, 7);

  // lambda-sweep
  auto* ls = app.add_subcommand("lambda-sweep", "PDIR error over a lambda grid on [0, 3 log n]");
  std::string ls_model, ls_grid, ls_out, ls_raw;
  int ls_n = 256, ls_reps = 20, ls_size = 7, ls_test = 0;
  TrainFlags ls_flags;
  ls->add_option("--model", ls_model, "model id")->required();
  ls->add_option("--n", ls_n, "training sample size")->capture_default_str();
  ls->add_option("--grid", ls_grid, "explicit comma list of lambda values");
  ls->add_option("--grid-size", ls_size, "evenly spaced points on [0, 3 log n]")->capture_default_str()->check(CLI::PositiveNumber);
  ls->add_option("--reps", ls_reps, "replications per lambda")->capture_default_str()->check(CLI::PositiveNumber);
  ls->add_option("--test-points", ls_test, "test lattice size T (default 100^d)");
  ls_flags.attach(ls, false);
  ls->add_option("--out", ls_out, "summary CSV with 90% bands")->required();
  ls->add_option("--raw", ls_raw, "per-replication results CSV");
  Seeded ls_seed;
  ls_seed.attach(ls, 7);

  // report
  auto* rp = app.add_subcommand("report", "summarise a results CSV");
  std::string rp_in, rp_out;
  bool rp_table = false, rp_plot = false;
  rp->add_option("--in", rp_in, "results CSV from simulate or lambda-sweep --raw")->required();
  rp->add_flag("--table", rp_table, "render a mean (sd) table");
  rp->add_flag("--plot-data", rp_plot, "emit x/y/band columns");
  rp->add_option("--out", rp_out, "output file (default stdout)");
  Seeded rp_seed;
  rp_seed.attach(rp, 0);

  // pdim
  auto* pd = app.add_subcommand("pdim", "pseudo-dimension bound 3 p D S (D + log2 U)");
  double pd_d = 0, pd_s = 0, pd_u = 0, pd_p = 0;
  pd->add_option("--depth", pd_d, "D")->required();
  pd->add_option("--size", pd_s, "S")->required();
  pd->add_option("--neurons", pd_u, "U")->required();
  pd->add_option("--p", pd_p, "p")->required();
  Seeded pd_seed;
  pd_seed.attach(pd, 0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  auto log_run = [&](std::uint64_t seed) {
    err << "# repu-lab " << REPU_VERSION << "\n# command: " << cmd->get_name() << "\n# seed: " << seed << "\n";
    err << "# config: jobs=" << jobs << "\n";
    for (const CLI::Option* o : cmd->get_options()) {
      if (o->get_name() == "--help") continue;
      std::string v = o->count() ? CLI::detail::join(o->results()) : o->get_default_str();
      err << "# config: " << o->get_name().substr(2) << "=" << v << "\n";
    }
  };

  try {
    if (cmd == pd) {
      log_run(pd_seed.resolve());
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f", pdim_bound(pd_d, pd_s, pd_u, pd_p));
      out << buf << "\n";
      return exit_ok;
    }
    if (cmd == cp) {
      CompileOptions opts;
      opts.seed = cp_seed.resolve();
      log_run(opts.seed);
      MultiPoly poly = parse_poly(read_file(cp_poly));
      CompiledPoly c = compile_poly(poly, parse_poly_architecture(cp_arch), cp_p, opts);
      save_network(c.net, cp_out);
      if (!cp_report.empty()) write_file_atomic(cp_report, c.report.to_json());
      err << "# compiled: depth " << c.report.stats.depth << ", width " << c.report.stats.width << ", neurons "
          << c.report.stats.neurons << ", max rel residual " << c.report.max_rel_residual << "\n";
      return exit_ok;
    }
    if (cmd == gn) {
      log_run(gn_seed.resolve());
      MixedRepuNetwork src = load_network(gn_in);
      MixedRepuNetwork derived = [&] {
        if (gn_coord == "all") return compile_gradient(src);
        int j = 0;
        try {
          j = std::stoi(gn_coord);
        } catch (const std::exception&) {
          throw InvalidArgument("--coord must be an integer or 'all'");
        }
        if (j < 1 || j > src.input_dim()) throw InvalidArgument("--coord out of range 1.." + std::to_string(src.input_dim()));
        return compile_partial(src, j - 1);
      }();
      if (gn_audit) {
        bool ok = true;
        if (gn_coord == "all") {
          for (int j = 0; j < src.input_dim(); ++j) {
            AuditReport a = structural_audit(src, compile_partial(src, j));
            err << "# partial " << (j + 1) << ": " << a.summary();
            ok = ok && a.ok;
          }
        } else {
          AuditReport a = structural_audit(src, derived);
          err << a.summary();
          ok = a.ok;
        }
        if (!ok) throw NumericalError("structural audit failed");
      }
      save_network(derived, gn_out);
      auto s = architecture_stats(derived);
      err << "# derived: depth " << s.depth << ", width " << s.width << ", neurons " << s.neurons << "\n";
      return exit_ok;
    }
    if (cmd == ev) {
      log_run(ev_seed.resolve());
      MixedRepuNetwork net = load_network(ev_net);
      if (ev_x.empty() == ev_points.empty()) throw InvalidArgument("eval needs exactly one of --x or --points");
      if (!ev_x.empty()) {
        Eigen::VectorXd y = forward(net, parse_list(ev_x));
        for (Eigen::Index o = 0; o < y.size(); ++o) out << (o ? "," : "") << fmt_num(y(o));
        out << "\n";
        return exit_ok;
      }
      Dataset pts = parse_dataset_csv(read_file(ev_points));
      write_out(ev_out, predictions_csv(NetworkPredictor(net), net.output_dim(), pts.X), out);
      return exit_ok;
    }
    if (cmd == ge) {
      std::uint64_t seed = ge_seed.resolve();
      log_run(seed);
      write_file_atomic(ge_out, dataset_to_csv(generate(model_by_name(ge_model), ge_n, seed, parse_design(ge_design))));
      return exit_ok;
    }
    if (cmd == tr) {
      std::uint64_t seed = tr_seed.resolve();
      log_run(seed);
      LossKind kind = parse_loss_kind(tr_loss);
      Dataset data = parse_dataset_csv(read_file(tr_data));
      EstimatorConfig cfg = tr_flags.config(kind == LossKind::dsme, seed);
      if (kind == LossKind::pdir) {
        if (!data.labeled()) throw InvalidArgument("pdir training needs a y column");
        cfg.train.lambda = cfg.lambda.resolve(data.n(), data.d());
      } else {
        data.y.resize(0);
      }
      Eigen::VectorXd centre = data.X.colwise().mean().transpose();
      MixedRepuNetwork net0 = init_network(cfg.arch, data.d(), kind == LossKind::dsme ? data.d() : 1, seed,
                                           std::span<const double>(centre.data(), static_cast<size_t>(centre.size())));
      TrainResult res = train(net0, data, kind, cfg.train);
      save_network(res.net, tr_out);
      if (!tr_history.empty()) {
        std::string h = "epoch,loss\n";
        for (size_t e = 0; e < res.history.size(); ++e) h += std::to_string(e) + "," + fmt_num(res.history[e]) + "\n";
        write_file_atomic(tr_history, h);
      }
      err << "# loss: initial " << res.initial_loss << ", final " << res.final_loss << "\n";
      return exit_ok;
    }
    if (cmd == fi) {
      std::uint64_t seed = fi_seed.resolve();
      log_run(seed);
      Dataset data = parse_dataset_csv(read_file(fi_data));
      FitResult fit = fit_method(fi_method, data, fi_flags.config(fi_method == "dsme", seed));
      int per_axis = fi_grid > 0 ? fi_grid : (data.d() <= 2 ? 100 : 30);
      Eigen::MatrixXd G = grid_over(data, per_axis);
      int outputs = fit.net ? fit.net->output_dim() : 1;
      write_file_atomic(fi_out, predictions_csv(*fit.predictor, outputs, G));
      if (!fi_net_out.empty()) {
        if (!fit.net) throw InvalidArgument("--net-out: method " + fi_method + " has no network");
        save_network(*fit.net, fi_net_out);
      }
      for (size_t j = 0; j < fit.monotonicity.mean_penalty.size(); ++j)
        err << "# coord " << (j + 1) << ": mean hinge penalty " << fit.monotonicity.mean_penalty[j]
            << ", share negative " << fit.monotonicity.frac_negative[j] << "\n";
      return exit_ok;
    }
    if (cmd == si) {
      std::uint64_t seed = si_seed.resolve();
      log_run(seed);
      ReplicateSpec spec;
      spec.model = model_by_name(si_model).name;
      spec.n = si_n;
      spec.methods = parse_words(si_methods);
      spec.reps = si_reps;
      spec.seed = seed;
      spec.test_points = si_test;
      spec.design = parse_design(si_design);
      spec.estimator = si_flags.config(false, seed);
      spec.jobs = jobs;
      auto rows = replicate(spec);
      write_file_atomic(si_out, to_csv(rows));
      err << render_table(summarize(rows));
      for (const auto& r : rows)
        if (!r.ok) err << "# rep " << r.rep << " " << r.method << " failed: " << r.error << "\n";
      return exit_ok;
    }
    if (cmd == ls) {
      std::uint64_t seed = ls_seed.resolve();
      log_run(seed);
      ReplicateSpec spec;
      spec.model = model_by_name(ls_model).name;
      spec.n = ls_n;
      spec.reps = ls_reps;
      spec.seed = seed;
      spec.test_points = ls_test;
      spec.estimator = ls_flags.config(false, seed);
      spec.jobs = jobs;
      std::vector<double> grid = ls_grid.empty() ? default_lambda_grid(ls_n, ls_size) : parse_list(ls_grid);
      std::vector<MetricsRow> raw;
      auto summary = lambda_sweep(spec, grid, &raw);
      write_file_atomic(ls_out, summary_csv(summary));
      if (!ls_raw.empty()) write_file_atomic(ls_raw, to_csv(raw));
      err << render_table(summary);
      return exit_ok;
    }
    if (cmd == rp) {
      log_run(rp_seed.resolve());
      auto rows = parse_metrics_csv(read_file(rp_in));
      auto summary = summarize(rows);
      std::string text;
      if (rp_plot) text = plot_data_csv(summary);
      if (rp_table || !rp_plot) text += render_table(summary);
      write_out(rp_out, text, out);
      return exit_ok;
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n" << cmd->help();
    return exit_usage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return exit_numerical;
  }
  return exit_usage;
}

}  // namespace repu::cli
