#include "tutorloop/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "tutorloop/errors.hpp"

namespace tutorloop {

namespace {

constexpr const char* kAskText = "Is the target above or below my last guess?";
constexpr int kTurnSlots = 8;
constexpr int kFeedbackSlots = 4;  // none, higher, lower, other

int ceil_log2(int n) {
    int c = 0;
    int v = 1;
    while (v < n) {
        v <<= 1;
        ++c;
    }
    return c;
}

int feedback_slot(const std::string& fb) {
    if (fb.empty()) return 0;
    if (fb == "higher") return 1;
    if (fb == "lower") return 2;
    return 3;
}

}  // namespace

ToyInterval track_toy_interval(const Observation& obs, int domain) {
    ToyInterval iv;
    iv.lo = 0;
    iv.hi = domain - 1;
    bool first_teacher = true;
    for (const auto& u : obs) {
        if (u.role == Role::Student) {
            ++iv.turn;
            if (auto g = extract_guess(u.text)) iv.last_guess = g;
        } else {
            if (first_teacher) {
                first_teacher = false;  // problem statement, not feedback
                continue;
            }
            // higher/lower always refers to the most recent guess, whether it
            // followed the guess itself or answered a question about it
            if (u.text == "higher") {
                if (iv.last_guess) iv.lo = std::max(iv.lo, *iv.last_guess + 1);
                iv.last_feedback = "higher";
            } else if (u.text == "lower") {
                if (iv.last_guess) iv.hi = std::min(iv.hi, *iv.last_guess - 1);
                iv.last_feedback = "lower";
            } else {
                iv.last_feedback = "other";
            }
        }
    }
    if (iv.lo > iv.hi) {  // contradictory transcript; fall back to the full range
        iv.lo = 0;
        iv.hi = domain - 1;
    }
    return iv;
}

ToySoftmaxPolicy::ToySoftmaxPolicy(int domain) : domain_(domain) {
    if (domain_ < 2) throw ConfigError("toy policy domain must be >= 2");
    width_classes_ = ceil_log2(domain_) + 1;
    feature_dim_ = 3 * domain_ + width_classes_ + kTurnSlots + kFeedbackSlots + 1;
    theta_.assign(static_cast<std::size_t>(feature_dim_) * action_count(), 0.0);
}

std::vector<int> ToySoftmaxPolicy::active_features(const Observation& obs) const {
    ToyInterval iv = track_toy_interval(obs, domain_);
    int width = iv.hi - iv.lo + 1;
    int mid = iv.lo + (iv.hi - iv.lo) / 2;
    std::vector<int> active;
    active.reserve(7);
    int base = 0;
    active.push_back(base + iv.lo);
    base += domain_;
    active.push_back(base + iv.hi);
    base += domain_;
    active.push_back(base + mid);
    base += domain_;
    active.push_back(base + ceil_log2(width));
    base += width_classes_;
    active.push_back(base + std::min(iv.turn - 1, kTurnSlots - 1));
    base += kTurnSlots;
    active.push_back(base + feedback_slot(iv.last_feedback));
    base += kFeedbackSlots;
    active.push_back(base);  // bias
    return active;
}

std::vector<double> ToySoftmaxPolicy::logits_from_active(const std::vector<int>& active) const {
    std::vector<double> z(static_cast<std::size_t>(action_count()), 0.0);
    for (int f : active) {
        const double* row = theta_.data() + static_cast<std::size_t>(f) * action_count();
        for (int a = 0; a < action_count(); ++a) z[a] += row[a];
    }
    return z;
}

std::vector<double> ToySoftmaxPolicy::logits(const Observation& obs) const {
    return logits_from_active(active_features(obs));
}

std::vector<double> softmax(const std::vector<double>& logits, double temperature) {
    if (temperature < 0) throw ConfigError("temperature must be >= 0");
    std::vector<double> p(logits.size(), 0.0);
    if (temperature == 0.0) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < logits.size(); ++i)
            if (logits[i] > logits[best]) best = i;
        p[best] = 1.0;
        return p;
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double z : logits) mx = std::max(mx, z / temperature);
    double sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] / temperature - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double z : v) mx = std::max(mx, z);
    double sum = 0;
    for (double z : v) sum += std::exp(z - mx);
    return mx + std::log(sum);
}

std::vector<double> ToySoftmaxPolicy::action_probs(const Observation& obs,
                                                   double temperature) const {
    return softmax(logits(obs), temperature);
}

std::string ToySoftmaxPolicy::action_text(int action) const {
    if (action < 0 || action > domain_) throw Error("action index out of range");
    if (action == domain_) return kAskText;
    return "GUESS " + std::to_string(action);
}

std::optional<int> ToySoftmaxPolicy::action_index(const std::string& text) const {
    if (auto g = extract_guess(text)) {
        if (*g >= 0 && *g < domain_) return *g;
        return std::nullopt;
    }
    if (text == kAskText || is_question(text)) return domain_;
    return std::nullopt;
}

std::string ToySoftmaxPolicy::act(const Observation& obs, double temperature, Rng& rng) const {
    std::vector<double> probs = action_probs(obs, temperature);
    if (temperature == 0.0) {
        for (int a = 0; a < action_count(); ++a)
            if (probs[a] == 1.0) return action_text(a);
    }
    double u = uniform01(rng);
    double acc = 0;
    for (int a = 0; a < action_count(); ++a) {
        acc += probs[a];
        if (u < acc) return action_text(a);
    }
    return action_text(action_count() - 1);
}

double ToySoftmaxPolicy::score(const Observation& obs, const std::string& target) const {
    Observation ctx = obs;
    double total = 0;
    std::size_t start = 0;
    while (start <= target.size()) {
        std::size_t end = target.find('\n', start);
        std::string line = target.substr(
            start, end == std::string::npos ? std::string::npos : end - start);
        if (!line.empty()) {
            std::optional<int> a = action_index(line);
            if (!a) return -std::numeric_limits<double>::infinity();
            std::vector<double> z = logits_from_active(active_features(ctx));
            total += z[*a] - log_sum_exp(z);
            ctx.push_back({Role::Student, line});
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return total;
}

ToySoftmaxPolicy ToySoftmaxPolicy::make_snapshot() const {
    ToySoftmaxPolicy copy = *this;
    copy.snapshot_ = true;
    return copy;
}

double ToySoftmaxPolicy::kl_at(const Observation& obs, const ToySoftmaxPolicy& other) const {
    std::vector<double> zp = logits(obs);
    std::vector<double> zq = other.logits(obs);
    double lse_p = log_sum_exp(zp);
    double lse_q = log_sum_exp(zq);
    double kl = 0;
    for (int a = 0; a < action_count(); ++a) {
        double logp = zp[a] - lse_p;
        double logq = zq[a] - lse_q;
        kl += std::exp(logp) * (logp - logq);
    }
    return kl;
}

void ToySoftmaxPolicy::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["kind"] = "toy_softmax";
    j["domain"] = domain_;
    j["version"] = version_;
    j["theta"] = theta_;
    std::ofstream out(path);
    if (!out) throw Error("cannot write policy file '" + path + "'");
    out << j.dump() << "\n";
}

ToySoftmaxPolicy ToySoftmaxPolicy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open policy file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
        ToySoftmaxPolicy policy(j.at("domain").get<int>());
        auto theta = j.at("theta").get<std::vector<double>>();
        if (theta.size() != policy.theta_.size())
            throw ConfigError("policy file '" + path + "' has mismatched theta size");
        policy.theta_ = std::move(theta);
        policy.version_ = j.value("version", 0);
        return policy;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("policy file '" + path + "': " + e.what());
    }
}

namespace {

// Adapter so a shared ToySoftmaxPolicy can be handed out per episode.
class ToyStudentView : public StudentPolicy {
public:
    explicit ToyStudentView(const ToySoftmaxPolicy* policy) : policy_(policy) {}
    std::string kind() const override { return policy_->kind(); }
    std::string act(const Observation& obs, double temperature, Rng& rng) const override {
        return policy_->act(obs, temperature, rng);
    }
    bool scoring_capable() const override { return true; }
    double score(const Observation& obs, const std::string& target) const override {
        return policy_->score(obs, target);
    }

private:
    const ToySoftmaxPolicy* policy_;
};

}  // namespace

std::unique_ptr<StudentPolicy> ToyStudentFactory::make(const TaskInstance&) const {
    return std::make_unique<ToyStudentView>(policy_);
}

}  // namespace tutorloop
