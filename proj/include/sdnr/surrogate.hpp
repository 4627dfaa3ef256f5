#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sdnr/index_kind.hpp"
#include "sdnr/network.hpp"
#include "sdnr/powerflow.hpp"
#include "sdnr/scenario.hpp"

namespace sdnr {

/// Branch-wise network state, |E| rows of
/// [i, j, g_ij, b_ij, p_ij, q_ij, p_j, q_j]. Open branches are zero rows.
struct NetworkStateEncoding {
    static constexpr int kColumns = 8;

    int rows = 0;
    std::vector<double> values;  // row-major

    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * kColumns + col]; }
    double& at(int row, int col) { return values[static_cast<std::size_t>(row) * kColumns + col]; }
    int nonzero_rows() const;

    bool operator==(const NetworkStateEncoding&) const = default;
};

NetworkStateEncoding encode(const Network& net, const SwitchStatus& alpha, const PowerFlowSolution& sol);

struct LabeledDataset {
    int rows_per_sample = 0;  // branch count
    int buses = 0;
    IndexKind kind = IndexKind::sigma_min();
    double test_fraction = 0.3;
    std::uint64_t seed = 0;
    std::vector<NetworkStateEncoding> inputs;
    std::vector<double> targets;
    std::vector<std::uint8_t> is_test;
    std::vector<std::uint32_t> config_index;  // provenance of each row
    std::vector<std::uint32_t> sample_index;

    std::size_t size() const { return targets.size(); }
    std::vector<std::size_t> indices(bool test) const;
    void push(NetworkStateEncoding x, double y, std::uint32_t config, std::uint32_t sample);
};

struct DatasetOptions {
    std::size_t samples_per_config = 0;  // 0 = every sample with every config
    double test_fraction = 0.3;
    std::uint64_t seed = 1;
    SolverOptions solver;
};

/// Solves every drawn (config, sample) pair, drops unconverged ones and labels
/// the rest with the exact smallest Jacobian singular value.
LabeledDataset generate_dataset(const Network& net, const std::vector<SwitchStatus>& configs,
                                const std::vector<Sample>& samples, const DatasetOptions& opts);

/// Assigns the train/test split. Identical encodings always land in the same split.
void assign_split(LabeledDataset& data, double test_fraction, std::uint64_t seed);

/// `count` radial configurations drawn uniformly without replacement, in enumeration order.
std::vector<SwitchStatus> sample_radial_configs(const Network& net, std::size_t count, std::uint64_t seed);

void save_dataset(const LabeledDataset& data, const std::string& sidecar_path);
LabeledDataset load_dataset(const std::string& sidecar_path);

enum class Architecture { Cnn1d, Mlp };

/// "cnn1d" or "mlp".
std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& name);

struct Hyperparams {
    Architecture architecture = Architecture::Cnn1d;
    double learning_rate = 1e-3;
    int epochs = 30;
    int batch_size = 20;
    double dropout = 0.2;
    std::vector<int> filters{8, 16, 32, 64};
    int kernel = 3;
    std::vector<int> hidden{64, 32};
};

struct TrainingMetadata {
    std::uint64_t seed = 0;
    int epochs = 0;
    double train_mse = 0.0;  // on normalized targets
    double test_mse = 0.0;
    double train_rmse = 0.0;  // in index units
    double test_rmse = 0.0;
    double test_consistency = 0.0;  // percent; NaN when the test split has < 2 rows
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::vector<double> epoch_loss;
};

/// Trained stability-index predictor. Prediction is a pure function of the encoding.
class PredictorModel {
  public:
    PredictorModel() = default;

    double predict(const NetworkStateEncoding& enc) const;
    std::vector<double> predict(const LabeledDataset& data, const std::vector<std::size_t>& rows) const;

    int input_rows() const { return rows_; }
    Architecture architecture() const { return arch_; }
    const IndexKind& target_kind() const { return kind_; }
    const TrainingMetadata& metadata() const { return meta_; }

    nlohmann::json to_json() const;
    static PredictorModel from_json(const nlohmann::json& doc);
    void save(const std::string& path) const;
    static PredictorModel load(const std::string& path);

    /// A model whose every weight is zero and whose output bias is `bias`,
    /// with identity normalization. Its prediction is `bias` for every input.
    static PredictorModel zero_weights(int rows, int buses, const Hyperparams& hp, double bias,
                                       IndexKind kind = IndexKind::sigma_min());

  private:
    friend PredictorModel train(const LabeledDataset&, const Hyperparams&, std::uint64_t);
    friend class ModelTrainer;

    void init_layers(std::uint64_t seed);
    Eigen::MatrixXd prepare_input(const NetworkStateEncoding& enc) const;
    double forward(const Eigen::MatrixXd& input) const;

    Architecture arch_ = Architecture::Cnn1d;
    int rows_ = 0;
    int buses_ = 1;
    int kernel_ = 3;
    double dropout_ = 0.0;
    std::vector<int> widths_;  // conv filters or hidden widths
    IndexKind kind_ = IndexKind::sigma_min();
    Eigen::VectorXd feature_mean_ = Eigen::VectorXd::Zero(8);
    Eigen::VectorXd feature_std_ = Eigen::VectorXd::Ones(8);
    double target_mean_ = 0.0;
    double target_std_ = 1.0;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
    TrainingMetadata meta_;
};

/// Mini-batch Adam on the mean-squared error of normalized targets.
/// Deterministic for a given seed and dataset.
PredictorModel train(const LabeledDataset& data, const Hyperparams& hp, std::uint64_t seed);

/// Percentage of index pairs ordered the same way in both lists. A pair tied
/// in both lists agrees; a pair tied in only one does not.
double consistency(const std::vector<double>& real, const std::vector<double>& predicted);

}  // namespace sdnr
