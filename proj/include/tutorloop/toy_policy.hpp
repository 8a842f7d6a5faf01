#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tutorloop/policy.hpp"

namespace tutorloop {

// Interval implied by the GUESS/higher/lower exchanges visible in an
// observation. Also the oracle used to test toy feedback soundness.
struct ToyInterval {
    int lo = 0;
    int hi = 0;
    int turn = 1;                 // student turn about to be taken (1-based)
    std::string last_feedback;    // "", "higher", "lower", or "other"
    std::optional<int> last_guess;
};

ToyInterval track_toy_interval(const Observation& obs, int domain);

// Linear-softmax student over the toy action space (GUESS 0..M-1 plus ASK).
// Features are derived from the observation only: one-hot endpoints and
// midpoint of the consistent interval, a width class bucket, the turn index
// and the last feedback token.
class ToySoftmaxPolicy : public StudentPolicy {
public:
    explicit ToySoftmaxPolicy(int domain = 64);

    std::string kind() const override { return snapshot_ ? "reference_snapshot" : "toy_softmax"; }
    std::string act(const Observation& obs, double temperature, Rng& rng) const override;
    bool scoring_capable() const override { return true; }
    // Chain rule over newline-separated action strings; unknown actions score -inf.
    double score(const Observation& obs, const std::string& target) const override;

    int domain() const { return domain_; }
    int action_count() const { return domain_ + 1; }
    int feature_dim() const { return feature_dim_; }
    int version() const { return version_; }
    void bump_version() { ++version_; }

    std::string action_text(int action) const;
    std::optional<int> action_index(const std::string& text) const;

    // Indices of the active (value 1) features for an observation.
    std::vector<int> active_features(const Observation& obs) const;
    std::vector<double> logits(const Observation& obs) const;
    std::vector<double> logits_from_active(const std::vector<int>& active) const;
    // Softmax at the given temperature; temperature 0 collapses onto the argmax.
    std::vector<double> action_probs(const Observation& obs, double temperature = 1.0) const;

    std::vector<double>& theta() { return theta_; }
    const std::vector<double>& theta() const { return theta_; }
    double& theta_at(int feature, int action) { return theta_[feature * action_count() + action]; }

    // Deep immutable copy for use as the KL reference.
    ToySoftmaxPolicy make_snapshot() const;

    void save(const std::string& path) const;
    static ToySoftmaxPolicy load(const std::string& path);

    // KL(this || other) for the distributions at one observation.
    double kl_at(const Observation& obs, const ToySoftmaxPolicy& other) const;

private:
    int domain_;
    int width_classes_;
    int feature_dim_;
    int version_ = 0;
    bool snapshot_ = false;
    std::vector<double> theta_;  // [feature][action], zero-initialised
};

std::vector<double> softmax(const std::vector<double>& logits, double temperature = 1.0);
double log_sum_exp(const std::vector<double>& v);

class ToyStudentFactory : public StudentFactory {
public:
    explicit ToyStudentFactory(const ToySoftmaxPolicy& policy) : policy_(&policy) {}
    std::unique_ptr<StudentPolicy> make(const TaskInstance&) const override;

private:
    const ToySoftmaxPolicy* policy_;
};

}  // namespace tutorloop
