#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rlvc/classifier.hpp"
#include "rlvc/feature_graph.hpp"
#include "rlvc/mdp.hpp"
#include "rlvc/percept.hpp"
#include "rlvc/stats.hpp"

namespace rlvc {

/// Interaction database with percepts already resolved against the dictionary.
struct Dataset {
    std::vector<SymbolizedPercept> percepts;  // indexed by PerceptId
    std::vector<Interaction> interactions;
    std::size_t num_actions = 0;
    double discount = 0.9;
};

enum class Backend { tree, bdd };

struct RlvcConfig {
    double tau = 1.0;
    double alpha = 0.05;
    std::size_t max_splits_per_iteration = 8;
    std::size_t compaction_period = 10;  // 0 disables compaction
    std::size_t max_iterations = 100;
    std::size_t candidate_cap = 512;
    Backend backend = Backend::tree;
    bool composites = false;
    CompositeParams composite;
    EquivalenceSpec equivalence;
    SolverOptions solver;

    void validate() const;
};

using Classifier = std::variant<TreeClassifier, BddClassifier>;

ClassId classify(const Classifier& c, const FeatureTest& test);
std::vector<ClassId> classes_of(const Classifier& c);
std::size_t num_classes(const Classifier& c);

/// Memoised feature test for one percept against a feature graph.
FeatureTest feature_test(const SymbolizedPercept& s, const FeatureGraph& graph,
                         const CompositeParams& params);

struct ResidualSample {
    std::size_t t;  // interaction index
    ClassId cls;
    ActionId action;
    double delta;
};

/// Stochastic Bellman residuals of `q` (solved on `mapped`) along the database.
std::vector<ResidualSample> residuals(std::span<const Interaction> interactions,
                                      std::span<const ClassId> class_of, const MappedMdp& mapped,
                                      const QFunction& q);

/// True iff some action's residuals (with at least two samples) have
/// population variance above `tau`.
bool aliased(std::span<const ResidualSample> samples, double tau);

struct FeatureChoice {
    FeatureId feature;
    ActionId action;
    double score;            // weighted within-subset variance
    double variance_before;  // variance of the action's samples in the class
    double p_value;
};

/**
 * Variance-reduction split choice among `candidates` for the samples of one
 * class. `exhibits(t, f)` tells whether the percept s_t of interaction t
 * shows f. Returns nothing when no candidate splits some action's samples
 * into significantly different halves.
 */
std::optional<FeatureChoice> select_feature(
    std::span<const ResidualSample> samples, std::span<const FeatureId> candidates,
    const std::function<bool(std::size_t, FeatureId)>& exhibits, double alpha);

struct SplitRecord {
    ClassId cls;
    FeatureId feature;
    bool composite;
    ActionId action;
    double variance_before;
    double score;
};

struct IterationRecord {
    std::size_t k = 0;
    std::size_t classes = 0;  // m_k, classes the iteration started with
    std::size_t splits = 0;
    std::size_t merges = 0;
    std::size_t aliased_classes = 0;
    double max_residual_variance = 0.0;
    double error_learning = -1.0;  // negative when not evaluated
    double error_test = -1.0;
    std::vector<SplitRecord> selected;
    std::vector<std::pair<ClassId, double>> class_variances;  // worst action per class
};

struct IterationTrace {
    std::vector<IterationRecord> records;
};

/// CSV with header k,classes,splits,merges,aliased,max_residual_variance,error_learning,error_test.
void write_trace_csv(std::ostream& out, const IterationTrace& trace);

/// Percept-to-action mapping learned by RLVC.
class VisualPolicy {
public:
    VisualPolicy(Classifier classifier, FeatureGraph graph, CompositeParams params,
                 std::vector<ClassId> classes, QFunction q, Policy policy);

    ClassId classify(const SymbolizedPercept& s) const;
    ActionId act(const SymbolizedPercept& s) const;
    /// Q row of the percept's class; zeros for a class the solver never saw.
    std::vector<double> q_values(const SymbolizedPercept& s) const;

    const Classifier& classifier() const { return classifier_; }
    const FeatureGraph& graph() const { return graph_; }
    const CompositeParams& params() const { return params_; }
    const std::vector<ClassId>& classes() const { return classes_; }
    const QFunction& q() const { return q_; }
    const Policy& policy() const { return policy_; }
    std::size_t num_actions() const { return q_.num_actions(); }

    /// Directory checkpoint: classifier.txt, features.txt, policy.csv.
    void save(const std::string& directory) const;
    static VisualPolicy load(const std::string& directory, const FeatureDictionary& dict);

private:
    std::optional<StateId> state_of(ClassId c) const;

    Classifier classifier_;
    FeatureGraph graph_;
    CompositeParams params_;
    std::vector<ClassId> classes_;  // sorted; row i of q_ and policy_
    QFunction q_;
    Policy policy_;
};

/// Called after each iteration's solve, before refinement; may fill the error fields.
using IterationObserver = std::function<void(const VisualPolicy&, IterationRecord&)>;

struct RlvcResult {
    VisualPolicy policy;
    MappedMdp mapped;
    IterationTrace trace;
    bool converged = false;  // stopped because C_k = C_{k-1}
    std::vector<ClassId> assignment;  // class of each database percept
    std::vector<ResidualSample> final_residuals;
};

/**
 * The outer loop on a static database: estimate and solve the mapped MDP,
 * compute residuals, refine aliased classes (most samples first, within the
 * split budget), and compact periodically when the BDD backend is active.
 */
class RlvcLearner {
public:
    RlvcLearner(const Dataset& data, const FeatureGraph& graph, RlvcConfig config);

    /// One iteration; returns true if the classifier changed.
    bool step(const IterationObserver& observer = {});
    RlvcResult run(const IterationObserver& observer = {});

    /// Splits class `v` on feature `f` outside the loop, e.g. to replay a
    /// known split sequence. The BDD backend throws std::logic_error when `f`
    /// is constant on `v`.
    void refine(ClassId v, FeatureId f) { apply_split(v, f); }

    /// Merges equivalent classes whose union stays unaliased until none
    /// remain, then reorders variables.
    /// Returns the number of merges; a no-op for the tree backend.
    std::size_t post_process();

    const Classifier& classifier() const { return classifier_; }
    const FeatureGraph& graph() const { return graph_; }
    const std::vector<ClassId>& assignment() const { return assignment_; }
    const IterationTrace& trace() const { return trace_; }
    std::size_t iteration() const { return k_; }

    /// Solves the mapped MDP of the current classifier.
    void solve();
    const MappedMdp& mapped() const { return *mapped_; }
    const QFunction& q() const { return q_; }
    VisualPolicy snapshot() const;

    /// Called after every refine and merge with the updated classifier.
    using MutationHook = std::function<void(const Classifier&)>;
    void on_mutation(MutationHook hook) { mutation_hook_ = std::move(hook); }

private:
    bool exhibits(PerceptId p, FeatureId f) const;
    bool can_refine(ClassId v, FeatureId f) const;
    void apply_split(ClassId v, FeatureId f);
    std::optional<FeatureChoice> choose_primitive(std::span<const ResidualSample> samples) const;
    std::optional<std::pair<FeatureChoice, CompositeSpec>> choose_composite(
        std::span<const ResidualSample> samples) const;

    const Dataset& data_;
    FeatureGraph graph_;
    RlvcConfig config_;
    Classifier classifier_;
    std::vector<ClassId> assignment_;
    std::optional<MappedMdp> mapped_;
    QFunction q_;
    Policy policy_;
    IterationTrace trace_;
    std::size_t k_ = 0;
    MutationHook mutation_hook_;
};

RlvcResult run_rlvc(const Dataset& data, const FeatureGraph& graph, const RlvcConfig& config,
                    const IterationObserver& observer = {});

}  // namespace rlvc
