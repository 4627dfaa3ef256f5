#include "sdnr/stability.hpp"

#include "sdnr/error.hpp"

namespace sdnr {

Evaluator Evaluator::exact() { return Evaluator{}; }

Evaluator Evaluator::surrogate(std::shared_ptr<const PredictorModel> model) {
    if (!model) throw ArgumentError("surrogate evaluator needs a model");
    Evaluator ev;
    ev.mode_ = EvaluatorMode::Surrogate;
    ev.kind_ = model->target_kind();
    ev.model_ = std::move(model);
    return ev;
}

double Evaluator::evaluate(const Network& net, const SwitchStatus& alpha, const PowerFlowSolution& sol) const {
    if (!sol.converged) throw PreconditionError("stability index needs a converged power flow");
    if (mode_ == EvaluatorMode::Exact) return sigma_min(jacobian(net, alpha, sol));
    return model_->predict(encode(net, alpha, sol));
}

double Evaluator::expected_index(const Network& net, const SwitchStatus& alpha, const ScenarioSet& scen,
                                 const std::vector<PowerFlowSolution>& sols) const {
    if (sols.size() != scen.size())
        throw ArgumentError("expected " + std::to_string(scen.size()) + " scenario solutions, got " +
                            std::to_string(sols.size()));
    double total = 0.0;
    for (std::size_t w = 0; w < sols.size(); ++w) total += scen.pi[w] * evaluate(net, alpha, sols[w]);
    return total;
}

}  // namespace sdnr
