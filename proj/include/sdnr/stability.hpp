#pragma once

#include <memory>
#include <vector>

#include "sdnr/index_kind.hpp"
#include "sdnr/network.hpp"
#include "sdnr/powerflow.hpp"
#include "sdnr/scenario.hpp"
#include "sdnr/surrogate.hpp"

namespace sdnr {

enum class EvaluatorMode { Exact, Surrogate };

/// Maps a converged network state to a stability index value.
class Evaluator {
  public:
    static Evaluator exact();
    /// Throws ArgumentError on a null model.
    static Evaluator surrogate(std::shared_ptr<const PredictorModel> model);

    EvaluatorMode mode() const { return mode_; }
    const IndexKind& kind() const { return kind_; }
    const PredictorModel* model() const { return model_.get(); }

    double evaluate(const Network& net, const SwitchStatus& alpha, const PowerFlowSolution& sol) const;

    /// sum_w pi_w * evaluate(sol_w).
    double expected_index(const Network& net, const SwitchStatus& alpha, const ScenarioSet& scen,
                          const std::vector<PowerFlowSolution>& sols) const;

  private:
    EvaluatorMode mode_ = EvaluatorMode::Exact;
    IndexKind kind_ = IndexKind::sigma_min();
    std::shared_ptr<const PredictorModel> model_;
};

}  // namespace sdnr
