#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssv/errors.hpp"
#include "ssv/text.hpp"

namespace ssv {

enum class LossKind { hinge, logistic, squared };
enum class RegKind { l1, l2 };

inline const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::hinge: return "hinge";
        case LossKind::logistic: return "logistic";
        default: return "squared";
    }
}

inline LossKind loss_from_string(const std::string& s) {
    if (s == "hinge") return LossKind::hinge;
    if (s == "logistic") return LossKind::logistic;
    if (s == "squared") return LossKind::squared;
    throw config_error("unknown loss '" + s + "'");
}

inline const char* to_string(RegKind k) { return k == RegKind::l1 ? "l1" : "l2"; }

inline RegKind reg_from_string(const std::string& s) {
    if (s == "l1") return RegKind::l1;
    if (s == "l2") return RegKind::l2;
    throw config_error("unknown regularizer '" + s + "'");
}

struct SentenceExample {
    std::vector<std::string> tokens;
    int label = 0;  ///< one of -1, 0, +1
};

inline constexpr std::array<int, 3> kSentimentClasses = {-1, 0, +1};

struct SgdSchedule {
    double eta0 = 0.0;  ///< base step; 0 selects it by a pilot pass
    int epochs = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (eta0 < 0.0 || !std::isfinite(eta0))
            throw config_error("SgdSchedule: eta0 must be >= 0");
        if (epochs < 1) throw config_error("SgdSchedule: epochs must be >= 1");
    }
};

/// One-vs-rest linear scorer over the hashed feature space: three binary
/// models, one per sentiment class, argmax at prediction time with exact ties
/// resolved to neutral.
class ClassifierModel {
public:
    ClassifierModel() = default;
    ClassifierModel(int feature_dim_log2, LossKind loss, RegKind reg, double lambda)
        : loss_(loss), reg_(reg), lambda_(lambda) {
        if (feature_dim_log2 < 1 || feature_dim_log2 > 30)
            throw config_error("ClassifierModel: feature_dim_log2 out of range");
        if (lambda < 0.0 || !std::isfinite(lambda))
            throw config_error("ClassifierModel: lambda must be >= 0");
        dim_ = 1 << feature_dim_log2;
        for (auto& w : weights_) w.assign(static_cast<std::size_t>(dim_), 0.0);
        bias_.fill(0.0);
    }

    int feature_dim() const noexcept { return dim_; }
    LossKind loss() const noexcept { return loss_; }
    RegKind regularizer() const noexcept { return reg_; }
    double lambda() const noexcept { return lambda_; }

    double decision(int class_index, const HashedFeatures& x) const {
        const auto& w = weights_[static_cast<std::size_t>(class_index)];
        double s = bias_[static_cast<std::size_t>(class_index)];
        for (const auto& [idx, val] : x.entries) s += w[idx] * static_cast<double>(val);
        return s;
    }

    int predict(const HashedFeatures& x) const {
        double best = decision(0, x);
        int best_class = 0;
        bool tie = false;
        for (int c = 1; c < 3; ++c) {
            const double s = decision(c, x);
            if (s > best) {
                best = s;
                best_class = c;
                tie = false;
            } else if (s == best) {
                tie = true;
            }
        }
        return tie ? 0 : kSentimentClasses[static_cast<std::size_t>(best_class)];
    }

    int predict_tokens(const std::vector<std::string>& tokens) const {
        int lg = 0;
        for (int d = dim_; d > 1; d >>= 1) ++lg;
        return predict(hash_features(tokens, lg));
    }

    std::size_t nonzero_weights() const noexcept {
        std::size_t n = 0;
        for (const auto& w : weights_)
            for (double wi : w)
                if (wi != 0.0) ++n;
        return n;
    }

    std::array<std::vector<double>, 3>& weights() noexcept { return weights_; }
    const std::array<std::vector<double>, 3>& weights() const noexcept { return weights_; }
    std::array<double, 3>& bias() noexcept { return bias_; }
    const std::array<double, 3>& bias() const noexcept { return bias_; }

    /// Versioned persistence: one JSON header line, then the three dense
    /// weight blocks as raw little-endian float64.
    void save(const std::filesystem::path& path) const {
        nlohmann::json header{{"format", "ssv-linear-classifier"},
                              {"version", 1},
                              {"feature_dim", dim_},
                              {"loss", to_string(loss_)},
                              {"regularizer", to_string(reg_)},
                              {"lambda", lambda_},
                              {"classes", {-1, 0, 1}},
                              {"bias", {bias_[0], bias_[1], bias_[2]}},
                              {"weight_dtype", "float64le"}};
        std::ofstream f(path, std::ios::binary);
        if (!f) throw data_error("ClassifierModel::save: cannot open " + path.string());
        f << header.dump() << '\n';
        for (const auto& w : weights_)
            f.write(reinterpret_cast<const char*>(w.data()),
                    static_cast<std::streamsize>(w.size() * sizeof(double)));
        if (!f) throw data_error("ClassifierModel::save: write failed on " + path.string());
    }

    static ClassifierModel load(const std::filesystem::path& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw data_error("ClassifierModel::load: cannot open " + path.string());
        std::string line;
        if (!std::getline(f, line)) throw data_error("ClassifierModel::load: missing header");
        nlohmann::json header;
        try {
            header = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw data_error(std::string("ClassifierModel::load: bad header: ") + e.what());
        }
        if (header.value("format", "") != "ssv-linear-classifier")
            throw data_error("ClassifierModel::load: not a classifier model file");
        if (header.value("version", 0) != 1)
            throw data_error("ClassifierModel::load: unsupported model version");

        ClassifierModel m;
        m.dim_ = header.at("feature_dim").get<int>();
        if (m.dim_ < 2 || (m.dim_ & (m.dim_ - 1)) != 0)
            throw data_error("ClassifierModel::load: feature_dim must be a power of two");
        m.loss_ = loss_from_string(header.at("loss").get<std::string>());
        m.reg_ = reg_from_string(header.at("regularizer").get<std::string>());
        m.lambda_ = header.at("lambda").get<double>();
        const auto bias = header.at("bias");
        for (int c = 0; c < 3; ++c) m.bias_[static_cast<std::size_t>(c)] = bias.at(c).get<double>();
        for (auto& w : m.weights_) {
            w.assign(static_cast<std::size_t>(m.dim_), 0.0);
            f.read(reinterpret_cast<char*>(w.data()),
                   static_cast<std::streamsize>(w.size() * sizeof(double)));
            if (f.gcount() != static_cast<std::streamsize>(w.size() * sizeof(double)))
                throw data_error("ClassifierModel::load: truncated weight block");
        }
        return m;
    }

private:
    int dim_ = 0;
    LossKind loss_ = LossKind::hinge;
    RegKind reg_ = RegKind::l2;
    double lambda_ = 0.0;
    std::array<std::vector<double>, 3> weights_;
    std::array<double, 3> bias_{};
};

namespace detail {

/// Per-sample loss value at decision s for binary target y in {-1, +1}.
inline double loss_value(LossKind kind, double y, double s) {
    switch (kind) {
        case LossKind::hinge: return std::max(0.0, 1.0 - y * s);
        case LossKind::logistic: {
            const double u = y * s;
            return std::exp(-u) / (1.0 + std::exp(-u));
        }
        default: {
            const double r = y - s;
            return r * r;
        }
    }
}

/// dLoss/ds at decision s (a subgradient at the hinge kink).
inline double loss_slope(LossKind kind, double y, double s) {
    switch (kind) {
        case LossKind::hinge: return (y * s < 1.0) ? -y : 0.0;
        case LossKind::logistic: {
            const double u = y * s;
            const double sig = 1.0 / (1.0 + std::exp(-u));
            return -y * sig * (1.0 - sig);
        }
        default: return 2.0 * (s - y);
    }
}

/// SGD state of one binary sub-model, with the cumulative-penalty treatment
/// of L1 (weights can reach exact zero) and a lazily applied multiplicative
/// decay for L2 (which carries the regularizer's 1/p scaling).
struct BinarySgd {
    std::vector<double>& w;
    double& b;
    LossKind loss;
    RegKind reg;
    double lambda;
    double eta0;
    std::int64_t t = 0;
    double l1_budget = 0.0;          ///< cumulative eta_t * lambda
    std::vector<double> l1_applied;  ///< per-weight penalty already taken

    BinarySgd(std::vector<double>& w_, double& b_, LossKind loss_, RegKind reg_, double lambda_,
              double eta0_)
        : w(w_), b(b_), loss(loss_), reg(reg_), lambda(lambda_), eta0(eta0_) {
        if (reg == RegKind::l1) l1_applied.assign(w.size(), 0.0);
    }

    double step_size() const {
        return eta0 / (1.0 + eta0 * lambda * static_cast<double>(t));
    }

    void update(const HashedFeatures& x, double y) {
        const double eta = step_size();
        ++t;
        double s = b;
        for (const auto& [idx, val] : x.entries) s += w[idx] * static_cast<double>(val);
        const double g = loss_slope(loss, y, s);

        if (reg == RegKind::l2 && lambda > 0.0) {
            // R = p^{-1} sum w^2, so the decay is scaled by 2/p
            const double decay = 1.0 - eta * lambda * 2.0 / static_cast<double>(w.size());
            for (const auto& [idx, val] : x.entries) {
                (void)val;
                w[idx] *= decay;  // lazily correct would be global; touched-only is the
                                  // usual sparse approximation and is documented
            }
        }
        if (g != 0.0) {
            for (const auto& [idx, val] : x.entries) w[idx] -= eta * g * static_cast<double>(val);
            b -= eta * g;
        }
        if (reg == RegKind::l1 && lambda > 0.0) {
            l1_budget += eta * lambda;
            for (const auto& [idx, val] : x.entries) {
                (void)val;
                const double z = w[idx];
                double& q = l1_applied[idx];
                if (z > 0.0)
                    w[idx] = std::max(0.0, z - (l1_budget + q));
                else if (z < 0.0)
                    w[idx] = std::min(0.0, z + (l1_budget - q));
                q += w[idx] - z;
            }
        }
    }
};

inline double mean_loss(const ClassifierModel& m, const std::vector<HashedFeatures>& xs,
                        const std::vector<int>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double y = labels[i] == kSentimentClasses[static_cast<std::size_t>(c)] ? 1.0
                                                                                         : -1.0;
            total += loss_value(m.loss(), y, m.decision(c, xs[i]));
        }
    }
    return xs.empty() ? 0.0 : total / static_cast<double>(xs.size());
}

}  // namespace detail

/// Trains the one-vs-rest model by SGD over pre-hashed examples. Deterministic
/// under a fixed schedule seed: the visit order is the seed's shuffle, shared
/// by the three sub-models.
inline ClassifierModel train_hashed(const std::vector<HashedFeatures>& xs,
                                    const std::vector<int>& labels, LossKind loss, RegKind reg,
                                    double lambda, const SgdSchedule& schedule,
                                    int feature_dim_log2 = kDefaultFeatureDimLog2) {
    schedule.validate();
    if (xs.size() != labels.size() || xs.empty())
        throw config_error("train: examples and labels must align and be nonempty");
    bool seen[3] = {false, false, false};
    for (int y : labels) {
        if (y != -1 && y != 0 && y != 1) throw data_error("train: label outside {-1, 0, +1}");
        seen[y + 1] = true;
    }
    if (static_cast<int>(seen[0]) + seen[1] + seen[2] < 2)
        throw degenerate_sample_error("train: need at least 2 distinct classes");

    double eta0 = schedule.eta0;
    if (eta0 == 0.0) {
        // pilot pass: try a step ladder for one epoch on a slice, keep the
        // step with the lowest mean training loss (ties to the larger step)
        const std::size_t pilot_n = std::min<std::size_t>(xs.size(), 256);
        double best_loss = std::numeric_limits<double>::infinity();
        for (double cand : {10.0, 1.0, 0.1, 0.01}) {
            SgdSchedule pilot{cand, 1, schedule.seed};
            std::vector<HashedFeatures> px(xs.begin(), xs.begin() + pilot_n);
            std::vector<int> pl(labels.begin(), labels.begin() + pilot_n);
            ClassifierModel m;
            try {
                m = train_hashed(px, pl, loss, reg, lambda, pilot, feature_dim_log2);
            } catch (const degenerate_sample_error&) {
                continue;  // slice may be single-class; the full data is not
            }
            const double l = detail::mean_loss(m, px, pl);
            if (std::isfinite(l) && l < best_loss) {
                best_loss = l;
                eta0 = cand;
            }
        }
        if (eta0 == 0.0) eta0 = 0.01;  // every pilot diverged; smallest step
    }

    ClassifierModel model(feature_dim_log2, loss, reg, lambda);
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 eng(schedule.seed);

    std::array<std::unique_ptr<detail::BinarySgd>, 3> sgd;
    for (int c = 0; c < 3; ++c)
        sgd[static_cast<std::size_t>(c)] = std::make_unique<detail::BinarySgd>(
            model.weights()[static_cast<std::size_t>(c)], model.bias()[static_cast<std::size_t>(c)],
            loss, reg, lambda, eta0);

    for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), eng);
        for (std::size_t i : order) {
            for (int c = 0; c < 3; ++c) {
                const double y =
                    labels[i] == kSentimentClasses[static_cast<std::size_t>(c)] ? 1.0 : -1.0;
                sgd[static_cast<std::size_t>(c)]->update(xs[i], y);
            }
        }
    }
    return model;
}

inline std::vector<HashedFeatures> hash_examples(const std::vector<SentenceExample>& examples,
                                                 int feature_dim_log2 = kDefaultFeatureDimLog2) {
    std::vector<HashedFeatures> xs;
    xs.reserve(examples.size());
    for (const auto& ex : examples) {
        if (ex.tokens.empty()) throw data_error("train: example with empty token sequence");
        xs.push_back(hash_features(ex.tokens, feature_dim_log2));
    }
    return xs;
}

inline ClassifierModel train(const std::vector<SentenceExample>& examples, LossKind loss,
                             RegKind reg, double lambda, const SgdSchedule& schedule,
                             int feature_dim_log2 = kDefaultFeatureDimLog2) {
    std::vector<int> labels;
    labels.reserve(examples.size());
    for (const auto& ex : examples) labels.push_back(ex.label);
    return train_hashed(hash_examples(examples, feature_dim_log2), labels, loss, reg, lambda,
                        schedule, feature_dim_log2);
}

inline double accuracy(const ClassifierModel& model, const std::vector<HashedFeatures>& xs,
                       const std::vector<int>& labels) {
    if (xs.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (model.predict(xs[i]) == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(xs.size());
}

struct CrossValidationReport {
    double best_lambda = 0.0;
    std::vector<double> lambdas;
    std::vector<std::vector<double>> fold_accuracy;  ///< [lambda][fold]
    std::vector<double> mean_accuracy;               ///< per lambda
};

/// 5-fold (by default) cross-validation over a lambda grid with a
/// seed-deterministic fold assignment. Mean-accuracy ties choose the larger
/// lambda (the stronger regularizer).
inline CrossValidationReport cross_validate(const std::vector<SentenceExample>& examples,
                                            LossKind loss, RegKind reg,
                                            std::vector<double> lambdas,
                                            const SgdSchedule& schedule, int folds = 5,
                                            int feature_dim_log2 = kDefaultFeatureDimLog2) {
    if (folds < 2) throw config_error("cross_validate: folds must be >= 2");
    if (lambdas.empty()) throw config_error("cross_validate: empty lambda grid");
    if (examples.size() < static_cast<std::size_t>(folds))
        throw degenerate_sample_error("cross_validate: fewer examples than folds");
    int class_count[3] = {0, 0, 0};
    std::vector<int> labels;
    for (const auto& ex : examples) {
        if (ex.label < -1 || ex.label > 1)
            throw data_error("cross_validate: label outside {-1, 0, +1}");
        ++class_count[ex.label + 1];
        labels.push_back(ex.label);
    }
    for (int c = 0; c < 3; ++c)
        if (class_count[c] > 0 && class_count[c] < folds)
            throw degenerate_sample_error(
                "cross_validate: a class has fewer examples than folds (fold starvation)");

    const auto xs = hash_examples(examples, feature_dim_log2);
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 eng(schedule.seed);
    std::shuffle(order.begin(), order.end(), eng);
    std::vector<int> fold_of(xs.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        fold_of[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));

    CrossValidationReport report;
    report.lambdas = lambdas;
    for (double lam : lambdas) {
        std::vector<double> accs;
        for (int f = 0; f < folds; ++f) {
            std::vector<HashedFeatures> train_x, test_x;
            std::vector<int> train_y, test_y;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (fold_of[i] == f) {
                    test_x.push_back(xs[i]);
                    test_y.push_back(labels[i]);
                } else {
                    train_x.push_back(xs[i]);
                    train_y.push_back(labels[i]);
                }
            }
            const auto model =
                train_hashed(train_x, train_y, loss, reg, lam, schedule, feature_dim_log2);
            accs.push_back(accuracy(model, test_x, test_y));
        }
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(folds);
        report.fold_accuracy.push_back(std::move(accs));
        report.mean_accuracy.push_back(mean);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        const double cur = report.mean_accuracy[i], inc = report.mean_accuracy[best];
        if (cur > inc || (cur == inc && lambdas[i] > lambdas[best])) best = i;
    }
    report.best_lambda = lambdas[best];
    return report;
}

}  // namespace ssv
