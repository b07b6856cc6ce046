#include "repu/derivative_compiler.hpp"

#include <sstream>

#include "repu/errors.hpp"

namespace repu {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

int source_power(const MixedRepuNetwork& net) {
  if (net.output_dim() != 1)
    throw InvalidArgument("derivative compiler needs a scalar output; slice with output_head first");
  if (net.hidden_depth() == 0) return 0;
  auto p = net.uniform_hidden_power();
  if (!p) throw InvalidArgument("derivative compiler needs a uniform hidden power");
  if (*p < 2) throw InvalidArgument("derivative compiler: p = 1 has no derivative network in the class");
  return *p;
}

Layer make_layer(Index rows, Index cols) {
  Layer l;
  l.weights = MatrixXd::Zero(rows, cols);
  l.bias = VectorXd::Zero(rows);
  l.powers.assign(static_cast<size_t>(rows), ActivationPower(1));
  return l;
}

void set_powers(Layer& l, Index from, Index count, int t) {
  for (Index r = from; r < from + count; ++r) l.powers[static_cast<size_t>(r)] = ActivationPower(t);
}

Layer block_diagonal(const std::vector<const Layer*>& parts, bool shared_input) {
  Index rows = 0, cols = 0;
  for (auto* l : parts) {
    rows += l->out_dim();
    cols = shared_input ? l->in_dim() : cols + l->in_dim();
  }
  Layer out = make_layer(rows, cols);
  Index r0 = 0, c0 = 0;
  for (auto* l : parts) {
    out.weights.block(r0, c0, l->out_dim(), l->in_dim()) = l->weights;
    out.bias.segment(r0, l->out_dim()) = l->bias;
    for (Index r = 0; r < l->out_dim(); ++r) out.powers[static_cast<size_t>(r0 + r)] = l->powers[static_cast<size_t>(r)];
    r0 += l->out_dim();
    if (!shared_input) c0 += l->in_dim();
  }
  return out;
}

}  // namespace

MixedRepuNetwork compile_partial(const MixedRepuNetwork& net, int j) {
  const int p = source_power(net);
  const int d = net.input_dim();
  if (j < 0 || j >= d) throw InvalidArgument("coordinate index out of range");
  const auto& src = net.layers();
  const int depth = net.hidden_depth();

  std::vector<Layer> out;
  if (depth == 0) {
    Layer l = make_layer(1, d);
    l.bias(0) = src[0].weights(0, j);
    l.powers = {ActivationPower::linear()};
    out.push_back(std::move(l));
    return MixedRepuNetwork(std::move(out));
  }

  for (int k = 0; k < depth; ++k) {
    const Layer& s = src[static_cast<size_t>(k)];
    const Index n = s.out_dim(), m = s.in_dim();
    const bool first = k == 0;

    // A: sigma_p(z), sigma_{p-1}(z), sigma_1(g), sigma_1(-g).
    Layer a = make_layer(4 * n, first ? m : 3 * m);
    a.weights.block(0, 0, n, m) = s.weights;
    a.weights.block(n, 0, n, m) = s.weights;
    a.bias.segment(0, n) = s.bias;
    a.bias.segment(n, n) = s.bias;
    if (first) {
      a.bias.segment(2 * n, n) = s.weights.col(j);
      a.bias.segment(3 * n, n) = -s.weights.col(j);
    } else {
      // previous C block: [f | P | Q], tangent = P - Q
      a.weights.block(2 * n, m, n, m) = s.weights;
      a.weights.block(2 * n, 2 * m, n, m) = -s.weights;
      a.weights.block(3 * n, m, n, m) = -s.weights;
      a.weights.block(3 * n, 2 * m, n, m) = s.weights;
    }
    set_powers(a, 0, n, p);
    set_powers(a, n, n, p - 1);

    // B: carry f, then sigma_2 of g +- q with q = sigma_{p-1}(z).
    Layer b = make_layer(5 * n, 4 * n);
    for (Index u = 0; u < n; ++u) {
      b.weights(u, u) = 1.0;
      const Index r = n + 4 * u, g_pos = 2 * n + u, g_neg = 3 * n + u, q = n + u;
      const double sg[4] = {1, -1, 1, -1}, sq[4] = {1, -1, -1, 1};
      for (int i = 0; i < 4; ++i) {
        b.weights(r + i, g_pos) = sg[i];
        b.weights(r + i, g_neg) = -sg[i];
        b.weights(r + i, q) = sq[i];
      }
    }
    set_powers(b, n, 4 * n, 2);

    // C: carry f; h = p g q = (p/4)((g+q)^2 - (g-q)^2) split into its two signs.
    Layer c = make_layer(3 * n, 5 * n);
    const double w = p / 4.0;
    for (Index u = 0; u < n; ++u) {
      c.weights(u, u) = 1.0;
      const Index r = n + 4 * u;
      const double sgn[4] = {1, 1, -1, -1};
      for (int i = 0; i < 4; ++i) {
        c.weights(n + u, r + i) = w * sgn[i];
        c.weights(2 * n + u, r + i) = -w * sgn[i];
      }
    }
    out.push_back(std::move(a));
    out.push_back(std::move(b));
    out.push_back(std::move(c));
  }

  const Layer& so = src.back();
  const Index n = so.in_dim();
  Layer o = make_layer(1, 3 * n);
  o.weights.block(0, n, 1, n) = so.weights;
  o.weights.block(0, 2 * n, 1, n) = -so.weights;
  o.powers = {ActivationPower::linear()};
  out.push_back(std::move(o));
  return MixedRepuNetwork(std::move(out));
}

MixedRepuNetwork compile_gradient(const MixedRepuNetwork& net) {
  source_power(net);
  const int d = net.input_dim();
  std::vector<MixedRepuNetwork> parts;
  for (int j = 0; j < d; ++j) parts.push_back(compile_partial(net, j));
  if (d == 1) return parts.front();
  std::vector<Layer> layers;
  const size_t nl = parts.front().layers().size();
  for (size_t k = 0; k < nl; ++k) {
    std::vector<const Layer*> ls;
    for (const auto& pn : parts) ls.push_back(&pn.layers()[k]);
    Layer l = block_diagonal(ls, k == 0);
    if (k + 1 == nl) l.powers.assign(static_cast<size_t>(l.out_dim()), ActivationPower::linear());
    layers.push_back(std::move(l));
  }
  return MixedRepuNetwork(std::move(layers));
}

std::string AuditReport::summary() const {
  std::ostringstream os;
  os << (ok ? "audit passed" : "audit FAILED at block " + std::to_string(first_failure)) << "\n";
  for (const auto& b : blocks) os << "  block " << b.block << ": " << (b.ok ? "ok" : b.detail) << "\n";
  return os.str();
}

AuditReport structural_audit(const MixedRepuNetwork& source, const MixedRepuNetwork& derived) {
  AuditReport rep;
  const int p = source_power(source);
  const int depth = source.hidden_depth();
  const auto& src = source.layers();
  const auto& dl = derived.layers();
  auto fail = [&](BlockAudit& b, const std::string& why) {
    if (b.ok) b.detail = why;
    b.ok = false;
  };

  if (derived.input_dim() != source.input_dim() || derived.output_dim() != 1 ||
      derived.hidden_depth() != 3 * depth) {
    BlockAudit b{0, false, "derived depth " + std::to_string(derived.hidden_depth()) + ", expected " +
                              std::to_string(3 * depth)};
    rep.blocks.push_back(b);
    rep.ok = false;
    rep.first_failure = 0;
    return rep;
  }

  int j = -1;
  for (int k = 0; k < depth; ++k) {
    BlockAudit b{k, true, ""};
    const Layer& s = src[static_cast<size_t>(k)];
    const Index n = s.out_dim(), m = s.in_dim();
    const Layer& a = dl[static_cast<size_t>(3 * k)];
    const Layer& bb = dl[static_cast<size_t>(3 * k + 1)];
    const Layer& c = dl[static_cast<size_t>(3 * k + 2)];
    if (a.out_dim() != 4 * n || bb.out_dim() != 5 * n || c.out_dim() != 3 * n) {
      fail(b, "lane widths (" + std::to_string(a.out_dim()) + "," + std::to_string(bb.out_dim()) + "," +
                  std::to_string(c.out_dim()) + "), expected (" + std::to_string(4 * n) + "," +
                  std::to_string(5 * n) + "," + std::to_string(3 * n) + ")");
    } else {
      auto powers_are = [&](const Layer& l, Index from, Index count, int t) {
        for (Index r = from; r < from + count; ++r)
          if (l.powers[static_cast<size_t>(r)].value() != t) return false;
        return true;
      };
      if (!powers_are(a, 0, n, p) || !powers_are(a, n, n, p - 1) || !powers_are(a, 2 * n, 2 * n, 1))
        fail(b, "first layer powers differ from (p, p-1, 1, 1) lanes");
      if (!powers_are(bb, 0, n, 1) || !powers_are(bb, n, 4 * n, 2))
        fail(b, "second layer powers differ from (1, 2) lanes");
      if (!powers_are(c, 0, 3 * n, 1)) fail(b, "third layer powers differ from ReLU lanes");
      if (a.weights.block(0, 0, n, m) != s.weights || a.weights.block(n, 0, n, m) != s.weights ||
          a.bias.segment(0, n) != s.bias || a.bias.segment(n, n) != s.bias)
        fail(b, "value lanes do not replicate the source weights");
      if (k == 0) {
        for (int jj = 0; jj < m && j < 0; ++jj)
          if (a.bias.segment(2 * n, n) == s.weights.col(jj) && a.bias.segment(3 * n, n) == -s.weights.col(jj))
            j = jj;
        if (j < 0) fail(b, "tangent seed matches no input coordinate");
      } else if (a.weights.block(2 * n, m, n, m) != s.weights || a.weights.block(2 * n, 2 * m, n, m) != -s.weights) {
        fail(b, "tangent lanes do not replicate the source weights");
      }
      for (Index u = 0; u < n && b.ok; ++u) {
        if (bb.weights(u, u) != 1.0 || c.weights(u, u) != 1.0) fail(b, "value carry lane broken");
        for (int i = 0; i < 4; ++i) {
          double w = c.weights(n + u, n + 4 * u + i);
          if (std::abs(w) != p / 4.0) fail(b, "quartering weights differ from p/4");
        }
      }
    }
    rep.blocks.push_back(b);
  }

  BlockAudit ro{depth, true, ""};
  const Layer& so = src.back();
  const Layer& o = dl.back();
  const Index n = so.in_dim();
  if (depth > 0) {
    if (o.in_dim() != 3 * n || o.weights.block(0, n, 1, n) != so.weights ||
        o.weights.block(0, 2 * n, 1, n) != -so.weights || o.bias(0) != 0.0)
      fail(ro, "readout does not apply the source output weights to P - Q");
  }
  rep.blocks.push_back(ro);

  for (const auto& b : rep.blocks)
    if (!b.ok) {
      rep.ok = false;
      rep.first_failure = b.block;
      break;
    }
  return rep;
}

}  // namespace repu
