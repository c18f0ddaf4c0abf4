// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jscope/error.hpp"

namespace jscope::ops {
namespace {

using Data = std::shared_ptr<const std::vector<double>>;

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ValidationError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                        shape_string(b.shape()));
}

void require_rank(const char* op, const Tensor& a, std::size_t lo, std::size_t hi) {
  if (a.rank() < lo || a.rank() > hi) {
    throw ValidationError(std::string(op) + ": unsupported shape " + shape_string(a.shape()));
  }
}

Tensor make(OpKind kind, Shape shape, std::vector<double> value, std::vector<const Tensor*> parents,
            AdjointFn adjoint) {
  Tape* tape = nullptr;
  for (const Tensor* p : parents) {
    if (p->tape() != nullptr) {
      tape = p->tape();
      break;
    }
  }
  if (tape == nullptr) return Tensor(std::move(shape), std::move(value));
  return tape->record(kind, std::move(shape), std::move(value), std::move(parents), std::move(adjoint));
}

// c[m,n] += a[m,k] * b[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m,n] += a[m,k] * b[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] += s;
    }
  }
}

// c[k,n] += a[m,k]^T * b[m,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) mismatch("matmul", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  Data ad = a.shared_data(), bd = b.shared_data();
  return make(OpKind::matmul, {m, n}, std::move(out), {&a, &b},
              [ad, bd, m, k, n](std::span<const double> g, ParentGrads pg) {
                if (pg[0]) gemm_nt(g.data(), bd->data(), pg[0]->data(), m, n, k);
                if (pg[1]) gemm_tn(ad->data(), g.data(), pg[1]->data(), m, k, n);
              });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) mismatch("matmul_nt", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n, 0.0);
  gemm_nt(a.data().data(), b.data().data(), out.data(), m, k, n);
  Data ad = a.shared_data(), bd = b.shared_data();
  return make(OpKind::matmul_nt, {m, n}, std::move(out), {&a, &b},
              [ad, bd, m, k, n](std::span<const double> g, ParentGrads pg) {
                // dA = G B, dB = G^T A
                if (pg[0]) gemm_nn(g.data(), bd->data(), pg[0]->data(), m, n, k);
                if (pg[1]) gemm_tn(g.data(), ad->data(), pg[1]->data(), m, n, k);
              });
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  if (a.rank() != 2 || x.rank() != 1 || a.cols() != x.size()) mismatch("matvec", a, x);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m, 0.0);
  gemm_nt(a.data().data(), x.data().data(), out.data(), m, n, 1);
  Data ad = a.shared_data(), xd = x.shared_data();
  return make(OpKind::matvec, {m}, std::move(out), {&a, &x},
              [ad, xd, m, n](std::span<const double> g, ParentGrads pg) {
                if (pg[0]) gemm_nn(g.data(), xd->data(), pg[0]->data(), m, 1, n);
                if (pg[1]) gemm_tn(ad->data(), g.data(), pg[1]->data(), m, n, 1);
              });
}

Tensor transpose(const Tensor& a) {
  require_rank("transpose", a, 2, 2);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto src = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = src[i * n + j];
  return make(OpKind::transpose, {n, m}, std::move(out), {&a},
              [m, n](std::span<const double> g, ParentGrads pg) {
                for (std::size_t i = 0; i < m; ++i)
                  for (std::size_t j = 0; j < n; ++j) (*pg[0])[i * n + j] += g[j * m + i];
              });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make(OpKind::add, a.shape(), std::move(out), {&a, &b},
              [](std::span<const double> g, ParentGrads pg) {
                for (auto* buf : pg) {
                  if (!buf) continue;
                  for (std::size_t i = 0; i < g.size(); ++i) (*buf)[i] += g[i];
                }
              });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make(OpKind::sub, a.shape(), std::move(out), {&a, &b},
              [](std::span<const double> g, ParentGrads pg) {
                if (pg[0])
                  for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i];
                if (pg[1])
                  for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i] -= g[i];
              });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  Data ad = a.shared_data(), bd = b.shared_data();
  return make(OpKind::mul, a.shape(), std::move(out), {&a, &b},
              [ad, bd](std::span<const double> g, ParentGrads pg) {
                if (pg[0])
                  for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i] * (*bd)[i];
                if (pg[1])
                  for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i] += g[i] * (*ad)[i];
              });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a[i];
  return make(OpKind::scale, a.shape(), std::move(out), {&a},
              [c](std::span<const double> g, ParentGrads pg) {
                for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += c * g[i];
              });
}

Tensor scale_rows(const Tensor& a, std::span<const double> factors) {
  require_rank("scale_rows", a, 1, 2);
  const std::size_t m = a.rows(), n = a.cols();
  if (factors.size() != m) {
    throw ValidationError("scale_rows: " + std::to_string(factors.size()) + " factors for shape " +
                          shape_string(a.shape()));
  }
  std::vector<double> f(factors.begin(), factors.end());
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = f[r] * a[r * n + j];
  return make(OpKind::scale_rows, a.shape(), std::move(out), {&a},
              [f = std::move(f), n](std::span<const double> g, ParentGrads pg) {
                for (std::size_t r = 0; r < f.size(); ++r)
                  for (std::size_t j = 0; j < n; ++j) (*pg[0])[r * n + j] += f[r] * g[r * n + j];
              });
}

Tensor softmax(const Tensor& a, bool causal) {
  require_rank("softmax", a, 1, 2);
  const std::size_t m = a.rows(), n = a.cols();
  if (causal && a.rank() != 2) throw ValidationError("softmax: causal mask needs a matrix, got " + shape_string(a.shape()));
  std::vector<double> out(a.size(), 0.0);
  const auto x = a.data();
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t width = causal ? std::min(n, r + 1) : n;
    const double* xr = x.data() + r * n;
    double* yr = out.data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < width; ++j) mx = std::max(mx, xr[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      z += yr[j];
    }
    for (std::size_t j = 0; j < width; ++j) yr[j] /= z;
  }
  auto pd = std::make_shared<const std::vector<double>>(out);
  return make(OpKind::softmax, a.shape(), std::move(out), {&a},
              [pd, m, n, causal](std::span<const double> g, ParentGrads pg) {
                // (diag(p) - p p^T) g, row by row
                const auto& p = *pd;
                for (std::size_t r = 0; r < m; ++r) {
                  const std::size_t width = causal ? std::min(n, r + 1) : n;
                  const double* pr = p.data() + r * n;
                  const double* gr = g.data() + r * n;
                  double s = 0.0;
                  for (std::size_t j = 0; j < width; ++j) s += pr[j] * gr[j];
                  double* dr = pg[0]->data() + r * n;
                  for (std::size_t j = 0; j < width; ++j) dr[j] += pr[j] * (gr[j] - s);
                }
              });
}

Tensor rms_norm(const Tensor& a, const Tensor& gain, double eps) {
  require_rank("rms_norm", a, 1, 2);
  if (gain.rank() != 1 || gain.size() != a.cols()) mismatch("rms_norm", a, gain);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> inv(m);
  std::vector<double> out(a.size());
  const auto x = a.data();
  const auto gv = gain.data();
  for (std::size_t r = 0; r < m; ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) ss += x[r * n + j] * x[r * n + j];
    inv[r] = 1.0 / std::sqrt(ss / static_cast<double>(n) + eps);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = x[r * n + j] * inv[r] * gv[j];
  }
  Data xd = a.shared_data(), gd = gain.shared_data();
  return make(OpKind::rms_norm, a.shape(), std::move(out), {&a, &gain},
              [xd, gd, inv = std::move(inv), m, n](std::span<const double> g, ParentGrads pg) {
                const auto& x = *xd;
                const auto& gv = *gd;
                for (std::size_t r = 0; r < m; ++r) {
                  const double ir = inv[r];
                  const double* xr = x.data() + r * n;
                  const double* gr = g.data() + r * n;
                  if (pg[0]) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += gv[j] * gr[j] * xr[j];
                    const double c = ir * ir * ir * s / static_cast<double>(n);
                    double* dr = pg[0]->data() + r * n;
                    for (std::size_t j = 0; j < n; ++j) dr[j] += ir * gv[j] * gr[j] - c * xr[j];
                  }
                  if (pg[1]) {
                    for (std::size_t j = 0; j < n; ++j) (*pg[1])[j] += gr[j] * xr[j] * ir;
                  }
                }
              });
}

Tensor silu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / (1.0 + std::exp(-a[i]));
  Data ad = a.shared_data();
  return make(OpKind::silu, a.shape(), std::move(out), {&a},
              [ad](std::span<const double> g, ParentGrads pg) {
                const auto& x = *ad;
                for (std::size_t i = 0; i < g.size(); ++i) {
                  const double s = 1.0 / (1.0 + std::exp(-x[i]));
                  (*pg[0])[i] += g[i] * s * (1.0 + x[i] * (1.0 - s));
                }
              });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank("gather_rows", table, 2, 2);
  if (ids.empty()) throw ValidationError("gather_rows: empty id list");
  const std::size_t v = table.rows(), d = table.cols();
  std::vector<double> out(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= v) {
      throw ValidationError("gather_rows: id " + std::to_string(ids[r]) + " out of range for table " +
                            shape_string(table.shape()));
    }
    std::copy_n(table.data().data() + ids[r] * d, d, out.data() + r * d);
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return make(OpKind::gather, {ids.size(), d}, std::move(out), {&table},
              [idv = std::move(idv), d](std::span<const double> g, ParentGrads pg) {
                for (std::size_t r = 0; r < idv.size(); ++r)
                  for (std::size_t j = 0; j < d; ++j) (*pg[0])[idv[r] * d + j] += g[r * d + j];
              });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) mismatch("dot", a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  Data ad = a.shared_data(), bd = b.shared_data();
  return make(OpKind::dot, {}, {s}, {&a, &b}, [ad, bd](std::span<const double> g, ParentGrads pg) {
    if (pg[0])
      for (std::size_t i = 0; i < ad->size(); ++i) (*pg[0])[i] += g[0] * (*bd)[i];
    if (pg[1])
      for (std::size_t i = 0; i < ad->size(); ++i) (*pg[1])[i] += g[0] * (*ad)[i];
  });
}

Tensor l2_norm(const Tensor& a) {
  double ss = 0.0;
  for (double x : a.data()) ss += x * x;
  const double norm = std::sqrt(ss);
  Data ad = a.shared_data();
  return make(OpKind::l2_norm, {}, {norm}, {&a}, [ad, norm](std::span<const double> g, ParentGrads pg) {
    if (norm == 0.0) return;  // subgradient 0 at the origin
    for (std::size_t i = 0; i < ad->size(); ++i) (*pg[0])[i] += g[0] * (*ad)[i] / norm;
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return make(OpKind::sum, {}, {s}, {&a}, [](std::span<const double> g, ParentGrads pg) {
    for (auto& v : *pg[0]) v += g[0];
  });
}

Tensor select_row(const Tensor& a, std::size_t r) {
  require_rank("select_row", a, 2, 2);
  if (r >= a.rows()) {
    throw ValidationError("select_row: row " + std::to_string(r) + " out of range for " + shape_string(a.shape()));
  }
  const std::size_t n = a.cols();
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(r * n),
                          a.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  return make(OpKind::select_row, {n}, std::move(out), {&a}, [r, n](std::span<const double> g, ParentGrads pg) {
    for (std::size_t j = 0; j < n; ++j) (*pg[0])[r * n + j] += g[j];
  });
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count) {
  require_rank("slice_cols", a, 2, 2);
  const std::size_t m = a.rows(), n = a.cols();
  if (count == 0 || start + count > n) {
    throw ValidationError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                          ") out of range for " + shape_string(a.shape()));
  }
  std::vector<double> out(m * count);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(a.data().data() + i * n + start, count, out.data() + i * count);
  return make(OpKind::slice_cols, {m, count}, std::move(out), {&a},
              [m, n, start, count](std::span<const double> g, ParentGrads pg) {
                for (std::size_t i = 0; i < m; ++i)
                  for (std::size_t j = 0; j < count; ++j) (*pg[0])[i * n + start + j] += g[i * count + j];
              });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t n = 0;
  for (const auto& p : parts) {
    require_rank("concat_cols", p, 2, 2);
    if (p.rows() != m) mismatch("concat_cols", parts[0], p);
    widths.push_back(p.cols());
    n += p.cols();
  }
  std::vector<double> out(m * n);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < m; ++i) std::copy_n(p.data().data() + i * w, w, out.data() + i * n + off);
    off += w;
  }
  std::vector<const Tensor*> parents;
  for (const auto& p : parts) parents.push_back(&p);
  return make(OpKind::concat_cols, {m, n}, std::move(out), std::move(parents),
              [widths = std::move(widths), m, n](std::span<const double> g, ParentGrads pg) {
                std::size_t off = 0;
                for (std::size_t k = 0; k < widths.size(); ++k) {
                  const std::size_t w = widths[k];
                  if (pg[k])
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < w; ++j) (*pg[k])[i * w + j] += g[i * n + off + j];
                  off += w;
                }
              });
}

Tensor rotary(const Tensor& a, std::size_t n_heads, double base) {
  require_rank("rotary", a, 2, 2);
  const std::size_t t = a.rows(), d = a.cols();
  if (n_heads == 0 || d % n_heads != 0 || (d / n_heads) % 2 != 0) {
    throw ValidationError("rotary: width " + std::to_string(d) + " does not split into " + std::to_string(n_heads) +
                          " even-width heads");
  }
  const std::size_t hd = d / n_heads;
  auto cs = std::make_shared<std::vector<double>>(t * hd);  // cos/sin per (pos, pair)
  for (std::size_t p = 0; p < t; ++p) {
    for (std::size_t i = 0; i < hd / 2; ++i) {
      const double theta = static_cast<double>(p) * std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(hd));
      (*cs)[p * hd + 2 * i] = std::cos(theta);
      (*cs)[p * hd + 2 * i + 1] = std::sin(theta);
    }
  }
  std::vector<double> out(a.size());
  const auto x = a.data();
  for (std::size_t p = 0; p < t; ++p) {
    for (std::size_t h = 0; h < n_heads; ++h) {
      for (std::size_t i = 0; i < hd / 2; ++i) {
        const std::size_t c0 = p * d + h * hd + 2 * i;
        const double c = (*cs)[p * hd + 2 * i], s = (*cs)[p * hd + 2 * i + 1];
        out[c0] = c * x[c0] - s * x[c0 + 1];
        out[c0 + 1] = s * x[c0] + c * x[c0 + 1];
      }
    }
  }
  return make(OpKind::rotary, a.shape(), std::move(out), {&a},
              [cs, t, d, hd, n_heads](std::span<const double> g, ParentGrads pg) {
                auto& dx = *pg[0];
                for (std::size_t p = 0; p < t; ++p) {
                  for (std::size_t h = 0; h < n_heads; ++h) {
                    for (std::size_t i = 0; i < hd / 2; ++i) {
                      const std::size_t c0 = p * d + h * hd + 2 * i;
                      const double c = (*cs)[p * hd + 2 * i], s = (*cs)[p * hd + 2 * i + 1];
                      dx[c0] += c * g[c0] + s * g[c0 + 1];
                      dx[c0 + 1] += -s * g[c0] + c * g[c0 + 1];
                    }
                  }
                }
              });
}

Tensor cross_entropy(const Tensor& logits, std::span<const long> targets) {
  require_rank("cross_entropy", logits, 2, 2);
  const std::size_t m = logits.rows(), v = logits.cols();
  if (targets.size() != m) {
    throw ValidationError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                          shape_string(logits.shape()));
  }
  auto probs = std::make_shared<std::vector<double>>(m * v, 0.0);
  std::vector<long> tg(targets.begin(), targets.end());
  std::size_t counted = 0;
  double total = 0.0;
  const auto z = logits.data();
  for (std::size_t r = 0; r < m; ++r) {
    if (tg[r] < 0) continue;
    if (static_cast<std::size_t>(tg[r]) >= v) {
      throw ValidationError("cross_entropy: target " + std::to_string(tg[r]) + " out of range for " +
                            std::to_string(v) + " classes");
    }
    const double* zr = z.data() + r * v;
    const double mx = *std::max_element(zr, zr + v);
    double s = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      (*probs)[r * v + j] = std::exp(zr[j] - mx);
      s += (*probs)[r * v + j];
    }
    for (std::size_t j = 0; j < v; ++j) (*probs)[r * v + j] /= s;
    total += -(zr[tg[r]] - mx - std::log(s));
    ++counted;
  }
  if (counted == 0) throw ValidationError("cross_entropy: no rows with a target");
  const double inv = 1.0 / static_cast<double>(counted);
  return make(OpKind::cross_entropy, {}, {total * inv}, {&logits},
              [probs, tg = std::move(tg), v, inv](std::span<const double> g, ParentGrads pg) {
                for (std::size_t r = 0; r < tg.size(); ++r) {
                  if (tg[r] < 0) continue;
                  for (std::size_t j = 0; j < v; ++j) (*pg[0])[r * v + j] += g[0] * inv * (*probs)[r * v + j];
                  (*pg[0])[r * v + static_cast<std::size_t>(tg[r])] -= g[0] * inv;
                }
              });
}

}  // namespace jscope::ops
