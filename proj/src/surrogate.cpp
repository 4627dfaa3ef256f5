#include "sdnr/surrogate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "sdnr/error.hpp"

namespace sdnr {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

std::string base64_encode(const std::vector<double>& values) {
    using namespace boost::archive::iterators;
    using It = base64_from_binary<transform_width<const char*, 6, 8>>;
    const char* begin = reinterpret_cast<const char*>(values.data());
    const char* end = begin + values.size() * sizeof(double);
    std::string out{It(begin), It(end)};
    out.append((3 - (values.size() * sizeof(double)) % 3) % 3, '=');
    return out;
}

std::vector<double> base64_decode(std::string text, std::size_t expected) {
    using namespace boost::archive::iterators;
    using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
    const std::size_t pad = static_cast<std::size_t>(std::count(text.begin(), text.end(), '='));
    std::replace(text.begin(), text.end(), '=', 'A');
    std::string bytes{It(text.begin()), It(text.end())};
    bytes.resize(bytes.size() - pad);
    if (bytes.size() != expected * sizeof(double)) throw InputError("weight blob has the wrong length");
    std::vector<double> out(expected);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

std::string arch_name(Architecture a) { return a == Architecture::Cnn1d ? "cnn1d" : "mlp"; }

Architecture arch_from_name(const std::string& s) {
    if (s == "cnn1d") return Architecture::Cnn1d;
    if (s == "mlp") return Architecture::Mlp;
    throw InputError("unknown architecture '" + s + "'");
}

nlohmann::json kind_json(const IndexKind& k) {
    return {{"name", to_string(k.name)}, {"orientation", to_string(k.orientation)}};
}

IndexKind kind_from_json(const nlohmann::json& j) {
    IndexKind k;
    k.name = j.at("name").get<std::string>() == "sigma_min" ? IndexName::SigmaMin : IndexName::External;
    k.orientation = j.at("orientation").get<std::string>() == "higher_is_stable" ? Orientation::HigherIsStable
                                                                               : Orientation::LowerIsStable;
    return k;
}

bool row_closed(const NetworkStateEncoding& enc, int r) { return enc.at(r, 2) != 0.0 || enc.at(r, 3) != 0.0; }

Eigen::MatrixXd im2col(const Eigen::MatrixXd& a, int kernel) {
    const Eigen::Index c = a.rows(), r = a.cols();
    const int pad = kernel / 2;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(c * kernel, r);
    for (Eigen::Index ch = 0; ch < c; ++ch)
        for (int k = 0; k < kernel; ++k)
            for (Eigen::Index pos = 0; pos < r; ++pos) {
                const Eigen::Index src = pos + k - pad;
                if (src >= 0 && src < r) p(ch * kernel + k, pos) = a(ch, src);
            }
    return p;
}

Eigen::MatrixXd col2im(const Eigen::MatrixXd& p, Eigen::Index channels, int kernel) {
    const Eigen::Index r = p.cols();
    const int pad = kernel / 2;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(channels, r);
    for (Eigen::Index ch = 0; ch < channels; ++ch)
        for (int k = 0; k < kernel; ++k)
            for (Eigen::Index pos = 0; pos < r; ++pos) {
                const Eigen::Index dst = pos + k - pad;
                if (dst >= 0 && dst < r) a(ch, dst) += p(ch * kernel + k, pos);
            }
    return a;
}

double mean_squared(const std::vector<double>& a, const std::vector<double>& b, double mean, double sd) {
    if (a.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = ((a[i] - mean) - (b[i] - mean)) / sd;
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

}  // namespace

std::string to_string(Architecture a) { return arch_name(a); }

Architecture architecture_from_string(const std::string& name) { return arch_from_name(name); }

int NetworkStateEncoding::nonzero_rows() const {
    int count = 0;
    for (int r = 0; r < rows; ++r) {
        bool any = false;
        for (int c = 0; c < kColumns; ++c) any = any || at(r, c) != 0.0;
        count += any ? 1 : 0;
    }
    return count;
}

NetworkStateEncoding encode(const Network& net, const SwitchStatus& alpha, const PowerFlowSolution& sol) {
    check_dimension(net, alpha);
    if (!sol.converged) throw PreconditionError("encode requires a converged solution");
    NetworkStateEncoding enc;
    enc.rows = static_cast<int>(net.num_branches());
    enc.values.assign(net.num_branches() * NetworkStateEncoding::kColumns, 0.0);
    for (const Branch& br : net.branches()) {
        if (!alpha.closed(br.id)) continue;
        const BranchFlow& f = sol.flows[br.id];
        const double row[] = {static_cast<double>(br.from), static_cast<double>(br.to), br.g, br.b,
                              f.p_ij, f.q_ij, sol.p[br.to], sol.q[br.to]};
        for (int c = 0; c < NetworkStateEncoding::kColumns; ++c) enc.at(br.id, c) = row[c];
    }
    return enc;
}

std::vector<std::size_t> LabeledDataset::indices(bool test) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i)
        if ((is_test[i] != 0) == test) out.push_back(i);
    return out;
}

void LabeledDataset::push(NetworkStateEncoding x, double y, std::uint32_t config, std::uint32_t sample) {
    inputs.push_back(std::move(x));
    targets.push_back(y);
    is_test.push_back(0);
    config_index.push_back(config);
    sample_index.push_back(sample);
}

void assign_split(LabeledDataset& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ArgumentError("test fraction must lie in [0, 1)");
    data.test_fraction = test_fraction;
    data.seed = seed;
    std::map<std::vector<double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) groups[data.inputs[i].values].push_back(i);

    std::vector<const std::vector<std::size_t>*> order;
    for (const auto& [key, members] : groups) order.push_back(&members);
    // map order is by content; sort by first member so the shuffle input does not depend on values
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->front() < b->front(); });
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto want = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.size())));
    std::size_t taken = 0;
    for (const auto* members : order) {
        const bool test = taken < want;
        for (std::size_t i : *members) data.is_test[i] = test ? 1 : 0;
        if (test) taken += members->size();
    }
}

LabeledDataset generate_dataset(const Network& net, const std::vector<SwitchStatus>& configs,
                                const std::vector<Sample>& samples, const DatasetOptions& opts) {
    LabeledDataset data;
    data.rows_per_sample = static_cast<int>(net.num_branches());
    data.buses = static_cast<int>(net.num_buses());
    data.kind = IndexKind::sigma_min();

    std::vector<std::uint32_t> all(samples.size());
    std::iota(all.begin(), all.end(), 0u);
    for (std::size_t c = 0; c < configs.size(); ++c) {
        const SwitchStatus& alpha = configs[c];
        if (!is_radial(net, alpha)) throw PreconditionError("dataset configuration " + std::to_string(c) + " is not radial");
        std::vector<std::uint32_t> chosen = all;
        if (opts.samples_per_config > 0 && opts.samples_per_config < samples.size()) {
            chosen.clear();
            std::mt19937_64 rng(opts.seed * 0x9E3779B97F4A7C15ull + c);
            std::sample(all.begin(), all.end(), std::back_inserter(chosen), opts.samples_per_config, rng);
        }
        for (std::uint32_t s : chosen) {
            const PowerFlowSolution sol = solve_pf(net, alpha, samples[s], opts.solver);
            if (!sol.converged) continue;
            const double label = sigma_min(jacobian(net, alpha, sol));
            data.push(encode(net, alpha, sol), label, static_cast<std::uint32_t>(c), s);
        }
    }
    if (data.size() == 0) throw EmptyDatasetError("no (configuration, sample) pair produced a converged power flow");
    assign_split(data, opts.test_fraction, opts.seed);
    return data;
}

std::vector<SwitchStatus> sample_radial_configs(const Network& net, std::size_t count, std::uint64_t seed) {
    auto all = enumerate_radial(net);
    if (count >= all.size()) return all;
    std::vector<SwitchStatus> out;
    out.reserve(count);
    std::mt19937_64 rng(seed);
    std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
    return out;
}

void save_dataset(const LabeledDataset& data, const std::string& sidecar_path) {
    namespace fs = std::filesystem;
    const fs::path sidecar(sidecar_path);
    fs::path bin = sidecar;
    bin.replace_extension(".bin");

    std::ofstream out(bin, std::ios::binary);
    if (!out) throw InputError("cannot write '" + bin.string() + "'");
    out.write("SDNRDS01", 8);
    const std::uint64_t rows = data.size();
    const std::int32_t width = data.rows_per_sample;
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&width), sizeof width);
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.write(reinterpret_cast<const char*>(data.inputs[i].values.data()),
                  static_cast<std::streamsize>(data.inputs[i].values.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(&data.targets[i]), sizeof(double));
        out.write(reinterpret_cast<const char*>(&data.is_test[i]), 1);
        out.write(reinterpret_cast<const char*>(&data.config_index[i]), sizeof(std::uint32_t));
        out.write(reinterpret_cast<const char*>(&data.sample_index[i]), sizeof(std::uint32_t));
    }

    nlohmann::json meta{{"format", "sdnr-dataset/1"},
                        {"binary", bin.filename().string()},
                        {"rows", rows},
                        {"rows_per_sample", width},
                        {"columns", NetworkStateEncoding::kColumns},
                        {"fields", {"i", "j", "g_ij", "b_ij", "p_ij", "q_ij", "p_j", "q_j"}},
                        {"record", "float64[rows_per_sample*columns] target:float64 is_test:uint8 config:uint32 sample:uint32"},
                        {"buses", data.buses},
                        {"target_kind", kind_json(data.kind)},
                        {"test_fraction", data.test_fraction},
                        {"seed", data.seed}};
    std::ofstream side(sidecar);
    if (!side) throw InputError("cannot write '" + sidecar.string() + "'");
    side << meta.dump(1) << '\n';
}

LabeledDataset load_dataset(const std::string& sidecar_path) {
    namespace fs = std::filesystem;
    std::ifstream side(sidecar_path);
    if (!side) throw InputError("cannot open dataset file '" + sidecar_path + "'");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(side);
        if (meta.at("format").get<std::string>() != "sdnr-dataset/1") throw InputError("unsupported dataset format");
    } catch (const nlohmann::json::exception& e) {
        throw InputError(sidecar_path + ": " + e.what());
    }
    LabeledDataset data;
    data.rows_per_sample = meta.at("rows_per_sample").get<int>();
    data.buses = meta.at("buses").get<int>();
    data.kind = kind_from_json(meta.at("target_kind"));
    data.test_fraction = meta.value("test_fraction", 0.3);
    data.seed = meta.value("seed", std::uint64_t{0});

    const fs::path bin = fs::path(sidecar_path).parent_path() / meta.at("binary").get<std::string>();
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw InputError("cannot open dataset binary '" + bin.string() + "'");
    char magic[8];
    std::uint64_t rows = 0;
    std::int32_t width = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&width), sizeof width);
    if (!in || std::string(magic, 8) != "SDNRDS01" || width != data.rows_per_sample)
        throw InputError(bin.string() + ": bad header");
    for (std::uint64_t i = 0; i < rows; ++i) {
        NetworkStateEncoding enc;
        enc.rows = width;
        enc.values.resize(static_cast<std::size_t>(width) * NetworkStateEncoding::kColumns);
        double y = 0.0;
        std::uint8_t test = 0;
        std::uint32_t config = 0, sample = 0;
        in.read(reinterpret_cast<char*>(enc.values.data()), static_cast<std::streamsize>(enc.values.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(&y), sizeof y);
        in.read(reinterpret_cast<char*>(&test), 1);
        in.read(reinterpret_cast<char*>(&config), sizeof config);
        in.read(reinterpret_cast<char*>(&sample), sizeof sample);
        if (!in) throw InputError(bin.string() + ": truncated at row " + std::to_string(i));
        data.push(std::move(enc), y, config, sample);
        data.is_test.back() = test;
    }
    return data;
}

// ---------------------------------------------------------------------------
// Predictor

void PredictorModel::init_layers(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    weights_.clear();
    biases_.clear();
    auto add = [&](Eigen::Index out, Eigen::Index in, double gain) {
        const double limit = std::sqrt(gain * 3.0 / static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Eigen::MatrixXd w(out, in);
        for (Eigen::Index c = 0; c < in; ++c)
            for (Eigen::Index r = 0; r < out; ++r) w(r, c) = dist(rng);
        weights_.push_back(std::move(w));
        biases_.push_back(Eigen::VectorXd::Zero(out));
    };
    Eigen::Index in = arch_ == Architecture::Cnn1d ? NetworkStateEncoding::kColumns
                                                   : static_cast<Eigen::Index>(rows_) * NetworkStateEncoding::kColumns;
    for (int width : widths_) {
        add(width, arch_ == Architecture::Cnn1d ? in * kernel_ : in, 2.0);
        in = width;
    }
    add(1, in, 1.0);
}

Eigen::MatrixXd PredictorModel::prepare_input(const NetworkStateEncoding& enc) const {
    if (enc.rows != rows_ || enc.values.size() != static_cast<std::size_t>(rows_) * NetworkStateEncoding::kColumns)
        throw DimensionError("encoding has " + std::to_string(enc.rows) + " rows, model expects " + std::to_string(rows_));
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(NetworkStateEncoding::kColumns, rows_);
    const double n = static_cast<double>(buses_);
    for (int r = 0; r < rows_; ++r) {
        if (!row_closed(enc, r)) continue;
        for (int c = 0; c < NetworkStateEncoding::kColumns; ++c) {
            double v = enc.at(r, c);
            if (c < 2) v /= n;
            x(c, r) = (v - feature_mean_(c)) / feature_std_(c);
        }
    }
    return x;
}

double PredictorModel::forward(const Eigen::MatrixXd& input) const {
    const std::size_t hidden = widths_.size();
    if (arch_ == Architecture::Cnn1d) {
        Eigen::MatrixXd a = input;
        for (std::size_t l = 0; l < hidden; ++l) {
            Eigen::MatrixXd z = weights_[l] * im2col(a, kernel_);
            z.colwise() += biases_[l];
            a = z.cwiseMax(0.0);
        }
        const Eigen::VectorXd pooled = a.rowwise().mean();
        return (weights_[hidden] * pooled)(0) + biases_[hidden](0);
    }
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
    for (std::size_t l = 0; l < hidden; ++l) a = (weights_[l] * a + biases_[l]).cwiseMax(0.0);
    return (weights_[hidden] * a)(0) + biases_[hidden](0);
}

double PredictorModel::predict(const NetworkStateEncoding& enc) const {
    if (weights_.empty()) throw PreconditionError("model has no weights");
    return target_mean_ + target_std_ * forward(prepare_input(enc));
}

std::vector<double> PredictorModel::predict(const LabeledDataset& data, const std::vector<std::size_t>& rows) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t i : rows) out.push_back(predict(data.inputs[i]));
    return out;
}

PredictorModel PredictorModel::zero_weights(int rows, int buses, const Hyperparams& hp, double bias, IndexKind kind) {
    PredictorModel m;
    m.arch_ = hp.architecture;
    m.rows_ = rows;
    m.buses_ = buses;
    m.kernel_ = hp.kernel;
    m.dropout_ = hp.dropout;
    m.widths_ = hp.architecture == Architecture::Cnn1d ? hp.filters : hp.hidden;
    m.kind_ = kind;
    m.init_layers(0);
    for (auto& w : m.weights_) w.setZero();
    m.biases_.back()(0) = bias;
    return m;
}

nlohmann::json PredictorModel::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        std::vector<double> w(weights_[l].data(), weights_[l].data() + weights_[l].size());
        std::vector<double> b(biases_[l].data(), biases_[l].data() + biases_[l].size());
        layers.push_back({{"rows", weights_[l].rows()}, {"cols", weights_[l].cols()},
                          {"weights", base64_encode(w)}, {"bias", base64_encode(b)}});
    }
    const auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json consistency_value = std::isfinite(meta_.test_consistency) ? nlohmann::json(meta_.test_consistency) : nlohmann::json(nullptr);
    return {
        {"format", "sdnr-model/1"},
        {"architecture", {{"kind", arch_name(arch_)}, {"input_rows", rows_}, {"input_columns", NetworkStateEncoding::kColumns},
                          {"widths", widths_}, {"kernel", kernel_}, {"dropout", dropout_}, {"pooling", "global_average"}}},
        {"normalization", {{"buses", buses_}, {"feature_mean", vec(feature_mean_)}, {"feature_std", vec(feature_std_)},
                           {"target_mean", target_mean_}, {"target_std", target_std_}}},
        {"target_kind", kind_json(kind_)},
        {"metadata", {{"seed", meta_.seed}, {"epochs", meta_.epochs}, {"train_mse", meta_.train_mse},
                      {"test_mse", meta_.test_mse}, {"train_rmse", meta_.train_rmse}, {"test_rmse", meta_.test_rmse},
                      {"test_consistency", consistency_value}, {"train_rows", meta_.train_rows},
                      {"test_rows", meta_.test_rows}, {"epoch_loss", meta_.epoch_loss}}},
        {"layers", layers},
    };
}

PredictorModel PredictorModel::from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "sdnr-model/1") throw InputError("unsupported model format");
        PredictorModel m;
        const auto& arch = doc.at("architecture");
        m.arch_ = arch_from_name(arch.at("kind").get<std::string>());
        m.rows_ = arch.at("input_rows").get<int>();
        m.widths_ = arch.at("widths").get<std::vector<int>>();
        m.kernel_ = arch.at("kernel").get<int>();
        m.dropout_ = arch.at("dropout").get<double>();
        const auto& norm = doc.at("normalization");
        m.buses_ = norm.at("buses").get<int>();
        const auto mean = norm.at("feature_mean").get<std::vector<double>>();
        const auto sd = norm.at("feature_std").get<std::vector<double>>();
        if (mean.size() != 8 || sd.size() != 8) throw InputError("feature normalization must have 8 entries");
        m.feature_mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), 8);
        m.feature_std_ = Eigen::Map<const Eigen::VectorXd>(sd.data(), 8);
        m.target_mean_ = norm.at("target_mean").get<double>();
        m.target_std_ = norm.at("target_std").get<double>();
        m.kind_ = kind_from_json(doc.at("target_kind"));
        const auto& md = doc.at("metadata");
        m.meta_.seed = md.at("seed").get<std::uint64_t>();
        m.meta_.epochs = md.at("epochs").get<int>();
        m.meta_.train_mse = md.at("train_mse").get<double>();
        m.meta_.test_mse = md.value("test_mse", std::numeric_limits<double>::quiet_NaN());
        m.meta_.train_rmse = md.at("train_rmse").get<double>();
        m.meta_.test_rmse = md.value("test_rmse", std::numeric_limits<double>::quiet_NaN());
        m.meta_.test_consistency = md.at("test_consistency").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                                       : md.at("test_consistency").get<double>();
        m.meta_.train_rows = md.at("train_rows").get<std::size_t>();
        m.meta_.test_rows = md.at("test_rows").get<std::size_t>();
        m.meta_.epoch_loss = md.at("epoch_loss").get<std::vector<double>>();
        for (const auto& layer : doc.at("layers")) {
            const auto r = layer.at("rows").get<Eigen::Index>();
            const auto c = layer.at("cols").get<Eigen::Index>();
            const auto w = base64_decode(layer.at("weights").get<std::string>(), static_cast<std::size_t>(r * c));
            const auto b = base64_decode(layer.at("bias").get<std::string>(), static_cast<std::size_t>(r));
            m.weights_.push_back(Eigen::Map<const Eigen::MatrixXd>(w.data(), r, c));
            m.biases_.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), r));
        }
        if (m.weights_.size() != m.widths_.size() + 1) throw InputError("layer count does not match the architecture");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("model schema: ") + e.what());
    }
}

void PredictorModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << to_json().dump(1) << '\n';
}

PredictorModel PredictorModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Training

class ModelTrainer {
  public:
    explicit ModelTrainer(PredictorModel& model) : m_(model) {
        for (std::size_t l = 0; l < m_.weights_.size(); ++l) {
            gw_.push_back(Eigen::MatrixXd::Zero(m_.weights_[l].rows(), m_.weights_[l].cols()));
            gb_.push_back(Eigen::VectorXd::Zero(m_.biases_[l].size()));
        }
        mw_ = vw_ = gw_;
        mb_ = vb_ = gb_;
    }

    void zero_grad() {
        for (auto& g : gw_) g.setZero();
        for (auto& g : gb_) g.setZero();
    }

    /// Forward with dropout, backward scaled by `scale`. Returns the squared error.
    double accumulate(const Eigen::MatrixXd& x, double y, std::mt19937_64& rng, double scale) {
        return m_.arch_ == Architecture::Cnn1d ? accumulate_cnn(x, y, rng, scale) : accumulate_mlp(x, y, rng, scale);
    }

    void adam_step(double lr) {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, t_), c2 = 1.0 - std::pow(beta2, t_);
        for (std::size_t l = 0; l < gw_.size(); ++l) {
            mw_[l] = beta1 * mw_[l] + (1.0 - beta1) * gw_[l];
            vw_[l] = beta2 * vw_[l] + (1.0 - beta2) * gw_[l].cwiseAbs2();
            m_.weights_[l].array() -= lr * (mw_[l].array() / c1) / ((vw_[l].array() / c2).sqrt() + eps);
            mb_[l] = beta1 * mb_[l] + (1.0 - beta1) * gb_[l];
            vb_[l] = beta2 * vb_[l] + (1.0 - beta2) * gb_[l].cwiseAbs2();
            m_.biases_[l].array() -= lr * (mb_[l].array() / c1) / ((vb_[l].array() / c2).sqrt() + eps);
        }
    }

  private:
    Eigen::VectorXd dropout_mask(Eigen::Index n, std::mt19937_64& rng) const {
        Eigen::VectorXd mask = Eigen::VectorXd::Ones(n);
        if (m_.dropout_ <= 0.0) return mask;
        std::bernoulli_distribution keep(1.0 - m_.dropout_);
        for (Eigen::Index i = 0; i < n; ++i) mask(i) = keep(rng) ? 1.0 / (1.0 - m_.dropout_) : 0.0;
        return mask;
    }

    double accumulate_cnn(const Eigen::MatrixXd& x, double y, std::mt19937_64& rng, double scale) {
        const std::size_t hidden = m_.widths_.size();
        const int k = m_.kernel_;
        std::vector<Eigen::MatrixXd> patches(hidden), pre(hidden);
        Eigen::MatrixXd a = x;
        for (std::size_t l = 0; l < hidden; ++l) {
            patches[l] = im2col(a, k);
            pre[l] = m_.weights_[l] * patches[l];
            pre[l].colwise() += m_.biases_[l];
            a = pre[l].cwiseMax(0.0);
        }
        const Eigen::Index positions = a.cols();
        const Eigen::VectorXd pooled = a.rowwise().mean();
        const Eigen::VectorXd mask = dropout_mask(pooled.size(), rng);
        const Eigen::VectorXd h = pooled.cwiseProduct(mask);
        const double out = (m_.weights_[hidden] * h)(0) + m_.biases_[hidden](0);
        const double err = out - y;

        const double g = 2.0 * err * scale;
        gw_[hidden] += g * h.transpose();
        gb_[hidden](0) += g;
        const Eigen::VectorXd dpooled = (m_.weights_[hidden].transpose() * g).cwiseProduct(mask);
        Eigen::MatrixXd da = dpooled.replicate(1, positions) / static_cast<double>(positions);
        for (std::size_t l = hidden; l-- > 0;) {
            const Eigen::MatrixXd dz = da.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
            gw_[l].noalias() += dz * patches[l].transpose();
            gb_[l] += dz.rowwise().sum();
            if (l > 0) da = col2im(m_.weights_[l].transpose() * dz, m_.weights_[l - 1].rows(), k);
        }
        return err * err;
    }

    double accumulate_mlp(const Eigen::MatrixXd& x, double y, std::mt19937_64& rng, double scale) {
        const std::size_t hidden = m_.widths_.size();
        std::vector<Eigen::VectorXd> act(hidden + 1), pre(hidden), masks(hidden);
        act[0] = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
        for (std::size_t l = 0; l < hidden; ++l) {
            pre[l] = m_.weights_[l] * act[l] + m_.biases_[l];
            masks[l] = dropout_mask(pre[l].size(), rng);
            act[l + 1] = pre[l].cwiseMax(0.0).cwiseProduct(masks[l]);
        }
        const double out = (m_.weights_[hidden] * act[hidden])(0) + m_.biases_[hidden](0);
        const double err = out - y;

        const double g = 2.0 * err * scale;
        gw_[hidden] += g * act[hidden].transpose();
        gb_[hidden](0) += g;
        Eigen::VectorXd da = m_.weights_[hidden].transpose() * g;
        for (std::size_t l = hidden; l-- > 0;) {
            const Eigen::VectorXd dz =
                da.cwiseProduct(masks[l]).cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
            gw_[l].noalias() += dz * act[l].transpose();
            gb_[l] += dz;
            if (l > 0) da = m_.weights_[l].transpose() * dz;
        }
        return err * err;
    }

    PredictorModel& m_;
    std::vector<Eigen::MatrixXd> gw_, mw_, vw_;
    std::vector<Eigen::VectorXd> gb_, mb_, vb_;
    int t_ = 0;
};

PredictorModel train(const LabeledDataset& data, const Hyperparams& hp, std::uint64_t seed) {
    if (data.size() == 0) throw EmptyDatasetError("dataset is empty");
    const auto train_rows = data.indices(false);
    const auto test_rows = data.indices(true);
    if (train_rows.empty() || test_rows.empty())
        throw TrainingError("degenerate split: " + std::to_string(train_rows.size()) + " training rows, " +
                            std::to_string(test_rows.size()) + " test rows");
    if (hp.epochs < 1 || hp.batch_size < 1 || !(hp.learning_rate > 0.0) || hp.dropout < 0.0 || hp.dropout >= 1.0)
        throw ArgumentError("invalid hyperparameters");
    const auto& widths = hp.architecture == Architecture::Cnn1d ? hp.filters : hp.hidden;
    if (widths.empty()) throw ArgumentError("architecture needs at least one hidden layer");

    PredictorModel m;
    m.arch_ = hp.architecture;
    m.rows_ = data.rows_per_sample;
    m.buses_ = std::max(1, data.buses);
    m.kernel_ = hp.kernel;
    m.dropout_ = hp.dropout;
    m.widths_ = widths;
    m.kind_ = data.kind;
    m.meta_.seed = seed;
    m.meta_.epochs = hp.epochs;

    // normalization statistics from closed rows of the training split
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(8), sq = Eigen::VectorXd::Zero(8);
    double count = 0.0;
    for (std::size_t i : train_rows) {
        const auto& enc = data.inputs[i];
        for (int r = 0; r < enc.rows; ++r) {
            if (!row_closed(enc, r)) continue;
            for (int c = 0; c < 8; ++c) {
                const double v = c < 2 ? enc.at(r, c) / m.buses_ : enc.at(r, c);
                sum(c) += v;
                sq(c) += v * v;
            }
            count += 1.0;
        }
    }
    if (count > 0.0) {
        m.feature_mean_ = sum / count;
        for (int c = 0; c < 8; ++c) {
            const double var = std::max(0.0, sq(c) / count - m.feature_mean_(c) * m.feature_mean_(c));
            m.feature_std_(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
        }
    }
    double ysum = 0.0, ysq = 0.0;
    for (std::size_t i : train_rows) {
        ysum += data.targets[i];
        ysq += data.targets[i] * data.targets[i];
    }
    const double ny = static_cast<double>(train_rows.size());
    m.target_mean_ = ysum / ny;
    const double yvar = std::max(0.0, ysq / ny - m.target_mean_ * m.target_mean_);
    m.target_std_ = yvar > 1e-24 * std::max(1.0, m.target_mean_ * m.target_mean_) ? std::sqrt(yvar) : 1.0;

    m.init_layers(seed);

    std::vector<Eigen::MatrixXd> inputs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) inputs[i] = m.prepare_input(data.inputs[i]);

    ModelTrainer trainer(m);
    std::mt19937_64 rng(seed ^ 0xA5A5A5A5A5A5A5A5ull);
    std::vector<std::size_t> order = train_rows;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
            const double scale = 1.0 / static_cast<double>(stop - start);
            trainer.zero_grad();
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t i = order[b];
                const double y = (data.targets[i] - m.target_mean_) / m.target_std_;
                epoch_loss += trainer.accumulate(inputs[i], y, rng, scale);
            }
            trainer.adam_step(hp.learning_rate);
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss)) throw TrainingError("training loss diverged at epoch " + std::to_string(epoch + 1));
        m.meta_.epoch_loss.push_back(epoch_loss);
    }

    auto evaluate = [&](const std::vector<std::size_t>& rows, double& mse, double& rmse) {
        std::vector<double> real, pred;
        for (std::size_t i : rows) {
            real.push_back(data.targets[i]);
            pred.push_back(m.target_mean_ + m.target_std_ * m.forward(inputs[i]));
        }
        mse = mean_squared(real, pred, m.target_mean_, m.target_std_);
        rmse = std::sqrt(mse) * m.target_std_;
        return std::make_pair(real, pred);
    };
    evaluate(train_rows, m.meta_.train_mse, m.meta_.train_rmse);
    const auto [real, pred] = evaluate(test_rows, m.meta_.test_mse, m.meta_.test_rmse);
    if (!std::isfinite(m.meta_.train_mse)) throw TrainingError("training produced non-finite predictions");
    m.meta_.train_rows = train_rows.size();
    m.meta_.test_rows = test_rows.size();
    m.meta_.test_consistency = real.size() >= 2 ? consistency(real, pred) : std::numeric_limits<double>::quiet_NaN();
    return m;
}

// ---------------------------------------------------------------------------
// Consistency: counts discordant pairs by merge sort (Knight's method) instead
// of visiting every pair.

namespace {

std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += mid - i;
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

template <class Key>
std::uint64_t tied_pairs(const std::vector<std::size_t>& sorted, Key key) {
    std::uint64_t ties = 0, run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && key(sorted[i]) == key(sorted[i - 1])) {
            ++run;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    return ties;
}

}  // namespace

double consistency(const std::vector<double>& real, const std::vector<double>& predicted) {
    if (real.size() != predicted.size()) throw ArgumentError("consistency needs equal-length lists");
    const std::size_t h = real.size();
    if (h < 2) throw ArgumentError("consistency needs at least two values");
    for (std::size_t i = 0; i < h; ++i)
        if (std::isnan(real[i]) || std::isnan(predicted[i])) throw ArgumentError("consistency input contains NaN");

    std::vector<std::size_t> order(h);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return real[a] != real[b] ? real[a] < real[b] : predicted[a] < predicted[b];
    });
    const std::uint64_t tied_real = tied_pairs(order, [&](std::size_t i) { return real[i]; });
    const std::uint64_t tied_both =
        tied_pairs(order, [&](std::size_t i) { return std::make_pair(real[i], predicted[i]); });

    std::vector<double> seq(h), buf(h);
    for (std::size_t i = 0; i < h; ++i) seq[i] = predicted[order[i]];
    const std::uint64_t discordant = merge_count(seq, buf, 0, h);
    // seq is now sorted by prediction
    std::uint64_t tied_pred = 0, run = 1;
    for (std::size_t i = 1; i <= h; ++i) {
        if (i < h && seq[i] == seq[i - 1]) {
            ++run;
        } else {
            tied_pred += run * (run - 1) / 2;
            run = 1;
        }
    }
    const std::uint64_t total = static_cast<std::uint64_t>(h) * (h - 1) / 2;
    const std::uint64_t untied = total - tied_real - tied_pred + tied_both;
    const std::uint64_t agree = (untied - discordant) + tied_both;
    return 100.0 * static_cast<double>(agree) / static_cast<double>(total);
}

}  // namespace sdnr
