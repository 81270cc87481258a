// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/numkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace abslab::nk {

namespace kernel {

void gemm_acc(const double* a, const double* b, double* c, std::size_t m,
              std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
}

}  // namespace kernel

namespace {

void RequireSameTape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) {
    throw std::invalid_argument("operands live on different tapes");
  }
}

void RequireSameShape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeString(a.shape()) + " vs " +
                         ShapeString(b.shape()));
  }
}

void Accumulate(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  RequireSameTape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) {
    throw DimensionError("matmul: inner extents differ " +
                         ShapeString(av.shape()) + " . " +
                         ShapeString(bv.shape()));
  }
  Tensor out({m, n});
  kernel::gemm_acc(av.raw(), bv.raw(), out.raw(), m, k, n);
  const int ia = a.id, ib = b.id;
  return a.tape->push("matmul", std::move(out), {ia, ib},
                      [ia, ib, m, k, n](Tape& t, int self) {
                        const std::vector<double>& g = t.grad(self);
                        if (t.needs_grad(ia)) {
                          kernel::gemm_nt_acc(g.data(), t.value(ib).raw(),
                                              t.grad(ia).data(), m, n, k);
                        }
                        if (t.needs_grad(ib)) {
                          kernel::gemm_tn_acc(t.value(ia).raw(), g.data(),
                                              t.grad(ib).data(), m, k, n);
                        }
                      });
}

Var add(Var a, Var b) {
  RequireSameTape(a, b);
  RequireSameShape("add", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int ia = a.id, ib = b.id;
  return a.tape->push("add", std::move(out), {ia, ib},
                      [ia, ib](Tape& t, int self) {
                        const std::vector<double>& g = t.grad(self);
                        if (t.needs_grad(ia)) Accumulate(t.grad(ia), g);
                        if (t.needs_grad(ib)) Accumulate(t.grad(ib), g);
                      });
}

Var mul(Var a, Var b) {
  RequireSameTape(a, b);
  RequireSameShape("mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int ia = a.id, ib = b.id;
  return a.tape->push(
      "mul", std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
        const std::vector<double>& g = t.grad(self);
        if (t.needs_grad(ia)) {
          std::vector<double>& ga = t.grad(ia);
          const Tensor& bv = t.value(ib);
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.needs_grad(ib)) {
          std::vector<double>& gb = t.grad(ib);
          const Tensor& av = t.value(ia);
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
        }
      });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& x : out.data()) x *= factor;
  const int ia = a.id;
  return a.tape->push("scale", std::move(out), {ia},
                      [ia, factor](Tape& t, int self) {
                        const std::vector<double>& g = t.grad(self);
                        std::vector<double>& ga = t.grad(ia);
                        for (std::size_t i = 0; i < ga.size(); ++i) {
                          ga[i] += factor * g[i];
                        }
                      });
}

Var add_row(Var a, Var bias) {
  RequireSameTape(a, bias);
  const Tensor& bv = bias.value();
  Tensor out = a.value();
  const std::size_t m = out.rows(), n = out.cols();
  if (bv.size() != n) {
    throw DimensionError("add_row: bias of " + ShapeString(bv.shape()) +
                         " for rows of width " + std::to_string(n));
  }
  for (std::size_t r = 0; r < m; ++r) {
    double* row = out.raw() + r * n;
    for (std::size_t c = 0; c < n; ++c) row[c] += bv[c];
  }
  const int ia = a.id, ib = bias.id;
  return a.tape->push("add_row", std::move(out), {ia, ib},
                      [ia, ib, m, n](Tape& t, int self) {
                        const std::vector<double>& g = t.grad(self);
                        if (t.needs_grad(ia)) Accumulate(t.grad(ia), g);
                        if (t.needs_grad(ib)) {
                          std::vector<double>& gb = t.grad(ib);
                          for (std::size_t r = 0; r < m; ++r) {
                            for (std::size_t c = 0; c < n; ++c) {
                              gb[c] += g[r * n + c];
                            }
                          }
                        }
                      });
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
  const int ia = a.id;
  return a.tape->push("relu", std::move(out), {ia}, [ia](Tape& t, int self) {
    const std::vector<double>& g = t.grad(self);
    const Tensor& x = t.value(ia);
    std::vector<double>& ga = t.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var softmax(Var a) {
  Tensor out = a.value();
  const std::size_t m = out.rows(), n = out.cols();
  for (std::size_t r = 0; r < m; ++r) {
    double* row = out.raw() + r * n;
    const double mx = *std::max_element(row, row + n);
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < n; ++c) row[c] /= sum;
  }
  const int ia = a.id;
  return a.tape->push(
      "softmax", std::move(out), {ia}, [ia, m, n](Tape& t, int self) {
        const std::vector<double>& g = t.grad(self);
        const Tensor& y = t.value(self);
        std::vector<double>& ga = t.grad(ia);
        for (std::size_t r = 0; r < m; ++r) {
          const double* yr = y.raw() + r * n;
          const double* gr = g.data() + r * n;
          double dot = 0.0;
          for (std::size_t c = 0; c < n; ++c) dot += yr[c] * gr[c];
          for (std::size_t c = 0; c < n; ++c) {
            ga[r * n + c] += yr[c] * (gr[c] - dot);
          }
        }
      });
}

Var layernorm(Var x, Var gain, Var bias, double eps) {
  RequireSameTape(x, gain);
  RequireSameTape(x, bias);
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError("layernorm: gain/bias must have " +
                         std::to_string(n) + " entries");
  }
  // Keep normalised values and inverse std-devs for the backward rule.
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  Tensor out(xv.shape());
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = xv.raw() + r * n;
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += row[c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < n; ++c) {
      const double h = (row[c] - mean) * is;
      (*xhat)[r * n + c] = h;
      out[r * n + c] = h * gv[c] + bv[c];
    }
  }
  const int ix = x.id, ig = gain.id, ib = bias.id;
  return x.tape->push(
      "layernorm", std::move(out), {ix, ig, ib},
      [ix, ig, ib, m, n, xhat, inv_std](Tape& t, int self) {
        const std::vector<double>& g = t.grad(self);
        const Tensor& gv = t.value(ig);
        if (t.needs_grad(ig)) {
          std::vector<double>& gg = t.grad(ig);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
              gg[c] += g[r * n + c] * (*xhat)[r * n + c];
            }
          }
        }
        if (t.needs_grad(ib)) {
          std::vector<double>& gb = t.grad(ib);
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
          }
        }
        if (t.needs_grad(ix)) {
          std::vector<double>& gx = t.grad(ix);
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t r = 0; r < m; ++r) {
            double sum_dh = 0.0, sum_dh_h = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
              const double dh = g[r * n + c] * gv[c];
              sum_dh += dh;
              sum_dh_h += dh * (*xhat)[r * n + c];
            }
            const double is = (*inv_std)[r];
            for (std::size_t c = 0; c < n; ++c) {
              const double dh = g[r * n + c] * gv[c];
              const double h = (*xhat)[r * n + c];
              gx[r * n + c] += is * (dh - inv_n * sum_dh - h * inv_n * sum_dh_h);
            }
          }
        }
      });
}

Var concat_last_axis(Var a, Var b) {
  RequireSameTape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.rows(), p = av.cols(), q = bv.cols();
  if (bv.rows() != m) {
    throw DimensionError("concat_last_axis: row counts differ " +
                         ShapeString(av.shape()) + " vs " +
                         ShapeString(bv.shape()));
  }
  Shape shape = av.shape();
  shape.back() = p + q;
  Tensor out(shape);
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(av.raw() + r * p, p, out.raw() + r * (p + q));
    std::copy_n(bv.raw() + r * q, q, out.raw() + r * (p + q) + p);
  }
  const int ia = a.id, ib = b.id;
  return a.tape->push("concat_last_axis", std::move(out), {ia, ib},
                      [ia, ib, m, p, q](Tape& t, int self) {
                        const std::vector<double>& g = t.grad(self);
                        const bool need_a = t.needs_grad(ia);
                        const bool need_b = t.needs_grad(ib);
                        for (std::size_t r = 0; r < m; ++r) {
                          const double* gr = g.data() + r * (p + q);
                          if (need_a) {
                            double* ga = t.grad(ia).data() + r * p;
                            for (std::size_t c = 0; c < p; ++c) ga[c] += gr[c];
                          }
                          if (need_b) {
                            double* gb = t.grad(ib).data() + r * q;
                            for (std::size_t c = 0; c < q; ++c) {
                              gb[c] += gr[p + c];
                            }
                          }
                        }
                      });
}

Var embedding_lookup(Var table, std::span<const int> ids) {
  const Tensor& tv = table.value();
  const std::size_t v = tv.rows(), e = tv.cols();
  if (ids.empty()) throw DimensionError("embedding_lookup: no ids");
  Tensor out({ids.size(), e});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      throw std::out_of_range("embedding_lookup: id " + std::to_string(ids[i]) +
                              " outside table of " + std::to_string(v));
    }
    std::copy_n(tv.raw() + ids[i] * e, e, out.raw() + i * e);
  }
  const int it = table.id;
  std::vector<int> rows(ids.begin(), ids.end());
  return table.tape->push("embedding_lookup", std::move(out), {it},
                          [it, e, rows = std::move(rows)](Tape& t, int self) {
                            const std::vector<double>& g = t.grad(self);
                            std::vector<double>& gt = t.grad(it);
                            for (std::size_t i = 0; i < rows.size(); ++i) {
                              double* dst = gt.data() + rows[i] * e;
                              const double* src = g.data() + i * e;
                              for (std::size_t c = 0; c < e; ++c) dst[c] += src[c];
                            }
                          });
}

Var cross_entropy(Var probs, std::span<const int> targets, int pad_id) {
  const Tensor& pv = probs.value();
  const std::size_t m = pv.rows(), v = pv.cols();
  if (targets.size() != m) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(m) + " rows");
  }
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (targets[r] == pad_id) continue;
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= v) {
      throw std::out_of_range("cross_entropy: target " +
                              std::to_string(targets[r]) + " outside [0, " +
                              std::to_string(v) + ")");
    }
    total -= std::log(pv[r * v + targets[r]]);
    ++count;
  }
  if (count == 0) {
    throw std::invalid_argument("cross_entropy: every position is padding");
  }
  const double inv = 1.0 / static_cast<double>(count);
  const int ip = probs.id;
  std::vector<int> tgt(targets.begin(), targets.end());
  return probs.tape->push(
      "cross_entropy", Tensor::Scalar(total * inv), {ip},
      [ip, v, inv, pad_id, tgt = std::move(tgt)](Tape& t, int self) {
        const double g = t.grad(self)[0];
        const Tensor& pv = t.value(ip);
        std::vector<double>& gp = t.grad(ip);
        for (std::size_t r = 0; r < tgt.size(); ++r) {
          if (tgt[r] == pad_id) continue;
          const std::size_t idx = r * v + tgt[r];
          gp[idx] -= g * inv / pv[idx];
        }
      });
}

namespace {

// Copies columns [off, off + w) of an [rows x cols] matrix into a dense block.
void GatherCols(const double* src, std::size_t rows, std::size_t cols,
                std::size_t off, std::size_t w, double* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(src + r * cols + off, w, dst + r * w);
  }
}

void ScatterAddCols(const double* src, std::size_t rows, std::size_t cols,
                    std::size_t off, std::size_t w, double* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < w; ++c) dst[r * cols + off + c] += src[r * w + c];
  }
}

}  // namespace

Var attention(Var q, Var k, Var v, int heads, bool causal) {
  RequireSameTape(q, k);
  RequireSameTape(q, v);
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  const std::size_t tq = qv.rows(), tk = kv.rows(), d = qv.cols();
  if (heads <= 0 || d % static_cast<std::size_t>(heads) != 0) {
    throw DimensionError("attention: heads must divide model width");
  }
  if (kv.cols() != d || vv.cols() != d || vv.rows() != tk) {
    throw DimensionError("attention: q/k/v shapes disagree");
  }
  if (causal && tq != tk) {
    throw DimensionError("attention: causal mask needs equal lengths");
  }
  const std::size_t h = static_cast<std::size_t>(heads);
  const std::size_t dk = d / h;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));

  // probs[head] is [tq x tk]; kept for the backward rule.
  auto probs = std::make_shared<std::vector<double>>(h * tq * tk, 0.0);
  Tensor out({tq, d});
  std::vector<double> qh(tq * dk), kh(tk * dk), vh(tk * dk), oh(tq * dk);
  for (std::size_t hd = 0; hd < h; ++hd) {
    GatherCols(qv.raw(), tq, d, hd * dk, dk, qh.data());
    GatherCols(kv.raw(), tk, d, hd * dk, dk, kh.data());
    GatherCols(vv.raw(), tk, d, hd * dk, dk, vh.data());
    double* p = probs->data() + hd * tq * tk;
    kernel::gemm_nt_acc(qh.data(), kh.data(), p, tq, dk, tk);
    for (std::size_t i = 0; i < tq; ++i) {
      double* row = p + i * tk;
      const std::size_t limit = causal ? i + 1 : tk;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < limit; ++j) {
        row[j] *= inv_sqrt;
        mx = std::max(mx, row[j]);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < limit; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      for (std::size_t j = 0; j < limit; ++j) row[j] /= sum;
      for (std::size_t j = limit; j < tk; ++j) row[j] = 0.0;
    }
    std::fill(oh.begin(), oh.end(), 0.0);
    kernel::gemm_acc(p, vh.data(), oh.data(), tq, tk, dk);
    ScatterAddCols(oh.data(), tq, d, hd * dk, dk, out.raw());
  }

  const int iq = q.id, ik = k.id, iv = v.id;
  return q.tape->push(
      "attention", std::move(out), {iq, ik, iv},
      [iq, ik, iv, tq, tk, d, h, dk, inv_sqrt, causal, probs](Tape& t,
                                                              int self) {
        const std::vector<double>& g = t.grad(self);
        const Tensor& qv = t.value(iq);
        const Tensor& kv = t.value(ik);
        const Tensor& vv = t.value(iv);
        const bool need_q = t.needs_grad(iq);
        const bool need_k = t.needs_grad(ik);
        const bool need_v = t.needs_grad(iv);
        std::vector<double> qh(tq * dk), kh(tk * dk), vh(tk * dk), gh(tq * dk);
        std::vector<double> dp(tq * tk), tmp_q(tq * dk), tmp_k(tk * dk),
            tmp_v(tk * dk);
        for (std::size_t hd = 0; hd < h; ++hd) {
          const double* p = probs->data() + hd * tq * tk;
          GatherCols(g.data(), tq, d, hd * dk, dk, gh.data());
          GatherCols(vv.raw(), tk, d, hd * dk, dk, vh.data());
          if (need_v) {
            std::fill(tmp_v.begin(), tmp_v.end(), 0.0);
            kernel::gemm_tn_acc(p, gh.data(), tmp_v.data(), tq, tk, dk);
            ScatterAddCols(tmp_v.data(), tk, d, hd * dk, dk,
                           t.grad(iv).data());
          }
          if (!need_q && !need_k) continue;
          std::fill(dp.begin(), dp.end(), 0.0);
          kernel::gemm_nt_acc(gh.data(), vh.data(), dp.data(), tq, dk, tk);
          // dS = P * (dP - rowsum(dP * P)), scaled by 1/sqrt(dk).
          for (std::size_t i = 0; i < tq; ++i) {
            const std::size_t limit = causal ? i + 1 : tk;
            double dot = 0.0;
            for (std::size_t j = 0; j < limit; ++j) {
              dot += dp[i * tk + j] * p[i * tk + j];
            }
            for (std::size_t j = 0; j < limit; ++j) {
              dp[i * tk + j] = p[i * tk + j] * (dp[i * tk + j] - dot) * inv_sqrt;
            }
            for (std::size_t j = limit; j < tk; ++j) dp[i * tk + j] = 0.0;
          }
          if (need_q) {
            GatherCols(kv.raw(), tk, d, hd * dk, dk, kh.data());
            std::fill(tmp_q.begin(), tmp_q.end(), 0.0);
            kernel::gemm_acc(dp.data(), kh.data(), tmp_q.data(), tq, tk, dk);
            ScatterAddCols(tmp_q.data(), tq, d, hd * dk, dk,
                           t.grad(iq).data());
          }
          if (need_k) {
            GatherCols(qv.raw(), tq, d, hd * dk, dk, qh.data());
            std::fill(tmp_k.begin(), tmp_k.end(), 0.0);
            kernel::gemm_tn_acc(dp.data(), qh.data(), tmp_k.data(), tq, tk, dk);
            ScatterAddCols(tmp_k.data(), tk, d, hd * dk, dk,
                           t.grad(ik).data());
          }
        }
      });
}

Var dropout(Var x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw std::invalid_argument("dropout rate must be < 1");
  const Tensor& xv = x.value();
  Tensor mask(xv.shape());
  std::bernoulli_distribution keep(1.0 - rate);
  const double kept = 1.0 / (1.0 - rate);
  for (double& m : mask.data()) m = keep(rng) ? kept : 0.0;
  return mul(x, x.tape->constant(std::move(mask)));
}

}  // namespace abslab::nk
