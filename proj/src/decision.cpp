#include "vauth/decision.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "vauth/errors.hpp"
#include "vauth/signal_core.hpp"

namespace vauth {
namespace {

double interpolate(const std::vector<double>& h, double pos) {
  const double last = static_cast<double>(h.size() - 1);
  pos = std::clamp(pos, 0.0, last);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= h.size()) return h.back();
  const double frac = pos - static_cast<double>(i);
  return h[i] + frac * (h[i + 1] - h[i]);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// The sign of the correlation peak depends on sensor polarity, so the
// classifier sees every vector with a non-negative center.
double polarity(const FeatureVector& fv) { return fv.center_value() < 0.0 ? -1.0 : 1.0; }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Logistic fit of labels on decision values (Newton's method with
// backtracking, regularized targets).
Calibration fit_calibration(const std::vector<double>& dec, const std::vector<int>& labels) {
  const std::size_t n = dec.size();
  const double prior1 = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double prior0 = static_cast<double>(n) - prior1;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] == 1 ? hi : lo;

  // P(y = 1 | d) = 1 / (1 + exp(A d + B))
  double a = 0.0;
  double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  const double sigma = 1e-12;
  auto objective = [&](double aa, double bb) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dec[i] * aa + bb;
      f += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };
  double fval = objective(a, b);
  for (int it = 0; it < 100; ++it) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dec[i] * a + b;
      double p, q;
      if (z >= 0.0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        moved = true;
        break;
      }
      step /= 2.0;
    }
    if (!moved) break;
  }
  return {-a, -b};
}

}  // namespace

FeatureVector build_feature_vector(const CrossCorrelation& h) {
  FeatureVector fv;
  if (h.values.empty()) return fv;
  const std::size_t tm = h.argmax_abs();
  const std::size_t te = h.values.size() - 1;
  fv.values[kFeatureCenter] = h.values[tm];
  if (tm > 0) {
    for (std::size_t n = 0; n < kFeatureCenter; ++n) {
      fv.values[n] = interpolate(h.values, static_cast<double>(n) * static_cast<double>(tm) / 500.0);
    }
  }
  if (te > tm) {
    const double span = static_cast<double>(te - tm);
    for (std::size_t n = 1; n <= 500; ++n) {
      fv.values[kFeatureCenter + n] = interpolate(h.values, static_cast<double>(tm) + static_cast<double>(n) * span / 500.0);
    }
  }
  return fv;
}

std::vector<LabeledExample> build_training_set(const std::vector<SampledSignal>& acc_recordings,
                                               const std::vector<SampledSignal>& mic_recordings,
                                               std::size_t replication, const FeatureExtractor& extract,
                                               TrainingSetStats* stats, std::size_t expected) {
  if (acc_recordings.size() != expected || mic_recordings.size() != expected) {
    throw InputError("training needs " + std::to_string(expected) + " recordings per channel, got " +
                     std::to_string(acc_recordings.size()) + " and " + std::to_string(mic_recordings.size()));
  }
  if (replication < 1) throw InputError("replication must be at least 1");
  TrainingSetStats s;
  std::vector<LabeledExample> out;
  out.reserve(expected * expected + expected * (replication - 1));
  for (std::size_t i = 0; i < expected; ++i) {
    for (std::size_t j = 0; j < expected; ++j) {
      LabeledExample ex;
      ex.label = i == j ? 1 : 0;
      ex.acc_id = i;
      ex.mic_id = j;
      std::optional<FeatureVector> fv;
      try {
        fv = extract(acc_recordings[i], mic_recordings[j]);
      } catch (const Error& e) {
        spdlog::warn("training pair ({}, {}) failed: {}", i, j, e.what());
      }
      if (fv) {
        ex.fv = std::move(*fv);
      } else {
        ++s.failed_pairs;
      }
      out.push_back(std::move(ex));
    }
  }
  s.base_examples = out.size();
  s.base_positives = expected;
  s.negatives = out.size() - expected;
  for (std::size_t r = 1; r < replication; ++r) {
    for (std::size_t i = 0; i < expected; ++i) out.push_back(out[i * expected + i]);
  }
  s.positives = expected * replication;
  if (stats) *stats = s;
  return out;
}

void export_training_csv(const std::vector<LabeledExample>& examples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  for (std::size_t k = 0; k < kFeatureLength; ++k) out << 'f' << k + 1 << ',';
  out << "label,acc_id,mic_id\n";
  for (const auto& ex : examples) {
    for (double v : ex.fv.values) out << v << ',';
    out << ex.label << ',' << ex.acc_id << ',' << ex.mic_id << '\n';
  }
}

double ClassifierModel::decision_value(const FeatureVector& fv) const {
  return dot(weights, fv.values) * (sign_canonical ? polarity(fv) : 1.0) + bias;
}

ClassifierModel train_classifier(const std::vector<LabeledExample>& examples, const TrainConfig& config) {
  const std::size_t n = examples.size();
  std::size_t positives = 0;
  for (const auto& ex : examples) {
    if (ex.label != 0 && ex.label != 1) throw DegenerateTrainingSet("labels must be 0 or 1");
    positives += static_cast<std::size_t>(ex.label);
  }
  if (positives == 0 || positives == n) {
    throw DegenerateTrainingSet("training set needs both classes, got " + std::to_string(positives) + " positives of " +
                                std::to_string(n));
  }

  std::vector<std::vector<double>> x(n);
  std::vector<double> y(n);
  std::vector<double> kdiag(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = examples[i].fv.values;
    const double sign = config.sign_canonical ? polarity(examples[i].fv) : 1.0;
    for (auto& v : x[i]) v *= sign;
    y[i] = examples[i].label == 1 ? 1.0 : -1.0;
    kdiag[i] = dot(x[i], x[i]);
  }
  Eigen::MatrixXd xm(n, kFeatureLength);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < kFeatureLength; ++k) xm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = x[i][k];
  }
  const Eigen::MatrixXd gram = xm * xm.transpose();
  auto kern = [&](std::size_t i, std::size_t j) { return gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); };

  // Dual: minimize 0.5 a'Qa - sum(a), Q_ij = y_i y_j K_ij, 0 <= a <= C, y'a = 0.
  // grad holds Qa - 1. Working pairs follow second-order selection.
  const double c = config.c;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto in_up = [&](std::size_t t) { return y[t] > 0.0 ? alpha[t] < c : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return y[t] > 0.0 ? alpha[t] > 0.0 : alpha[t] < c; };
  constexpr double kTau = 1e-12;

  std::size_t iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] > gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    if (i == n) break;
    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      const double diff = gmax - v;
      if (diff <= 0.0) continue;
      const double curv = std::max(kdiag[i] + kdiag[t] - 2.0 * kern(i, t), kTau);
      if (-diff * diff / curv < best) {
        best = -diff * diff / curv;
        j = t;
      }
    }
    if (j == n || gmax - gmin < config.tolerance) break;

    // Move along a_i += y_i * step, a_j -= y_j * step.
    const double curv = std::max(kdiag[i] + kdiag[j] - 2.0 * kern(i, j), kTau);
    double step = (gmax + y[j] * grad[j]) / curv;
    step = std::min(step, y[i] > 0.0 ? c - alpha[i] : alpha[i]);
    step = std::min(step, y[j] > 0.0 ? alpha[j] : c - alpha[j]);
    alpha[i] = std::clamp(alpha[i] + y[i] * step, 0.0, c);
    alpha[j] = std::clamp(alpha[j] - y[j] * step, 0.0, c);
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * step * (kern(t, i) - kern(t, j));
  }
  if (iter >= config.max_iterations) {
    spdlog::warn("SMO stopped at the iteration cap ({}) before converging", config.max_iterations);
  }

  // Bias from free support vectors, else the middle of the feasible interval.
  double rho_sum = 0.0;
  std::size_t free_count = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] > 0.0 && alpha[t] < c) {
      rho_sum += yg;
      ++free_count;
    } else if ((alpha[t] >= c) == (y[t] > 0.0)) {
      lb = std::max(lb, yg);
    } else {
      ub = std::min(ub, yg);
    }
  }
  const double rho = free_count ? rho_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);
  std::vector<double> w(kFeatureLength, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] == 0.0) continue;
    for (std::size_t k = 0; k < kFeatureLength; ++k) w[k] += alpha[t] * y[t] * x[t][k];
  }
  const double b = -rho;

  ClassifierModel model;
  model.weights = std::move(w);
  model.bias = b;
  model.sign_canonical = config.sign_canonical;
  std::vector<double> dec(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    dec[i] = model.decision_value(examples[i].fv);
    labels[i] = examples[i].label;
  }
  model.calibration = fit_calibration(dec, labels);
  model.meta.positives = positives;
  model.meta.negatives = n - positives;
  model.meta.training_accuracy = training_accuracy(model, examples);
  return model;
}

double training_accuracy(const ClassifierModel& model, const std::vector<LabeledExample>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    const bool predicted = model.decision_value(ex.fv) > 0.0;
    correct += predicted == (ex.label == 1) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

MatchDecision classify(const ClassifierModel& model, const FeatureVector& fv) {
  MatchDecision d;
  d.score = model.decision_value(fv);
  d.is_match = d.score > 0.0;
  d.probability = sigmoid(model.calibration.slope * d.score + model.calibration.intercept);
  d.max_xcorr = fv.center_value();
  return d;
}

bool threshold_rule(double m, double th) { return m > th; }

MatchDecision threshold_decision(const FeatureVector& fv, double th) {
  MatchDecision d;
  d.max_xcorr = fv.center_value();
  const double m = std::abs(d.max_xcorr);
  d.is_match = threshold_rule(m, th);
  d.score = m - th;
  d.probability = std::clamp(m, 0.0, 1.0);
  return d;
}

double segment_composition_bound(const std::vector<SampledSignal>& f_slots,
                                 const std::vector<SampledSignal>& g_slots) {
  const std::size_t n = f_slots.size();
  if (n == 0 || g_slots.size() != n) throw InvalidSignal("composition bound needs equal, non-zero slot counts");
  std::vector<double> nf(n), ng(n);
  double ef = 0.0, eg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    nf[i] = std::sqrt(energy(f_slots[i].samples()));
    ng[i] = std::sqrt(energy(g_slots[i].samples()));
    ef += nf[i] * nf[i];
    eg += ng[i] * ng[i];
  }
  if (ef == 0.0 || eg == 0.0) throw DegenerateSignal("composition bound needs non-zero signals");
  const double e = std::sqrt(ef) * std::sqrt(eg);
  const auto span = static_cast<std::ptrdiff_t>(n);
  double bound = 0.0;
  for (std::ptrdiff_t d = -(span - 1); d <= span - 1; ++d) {
    double sum = 0.0;
    for (std::ptrdiff_t i = 0; i < span; ++i) {
      const std::ptrdiff_t j = i + d;
      if (j < 0 || j >= span) continue;
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      if (nf[ui] == 0.0 || ng[uj] == 0.0) continue;
      const double mij = xcorr_normalized(f_slots[ui], g_slots[uj]).max_abs();
      sum += mij * nf[ui] * ng[uj];
    }
    bound = std::max(bound, sum / e);
  }
  return bound;
}

}  // namespace vauth
