#include "llp/learners.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "llp/errors.hpp"
#include "learners_impl.hpp"

namespace llp {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::EMLR: return "emlr";
    case Algorithm::MM: return "mm";
    case Algorithm::LMM: return "lmm";
    case Algorithm::AMM: return "amm";
    case Algorithm::DLLP: return "dllp";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "emlr" || s == "em/lr" || s == "em-lr") return Algorithm::EMLR;
  if (s == "mm") return Algorithm::MM;
  if (s == "lmm") return Algorithm::LMM;
  if (s == "amm") return Algorithm::AMM;
  if (s == "dllp") return Algorithm::DLLP;
  throw Error("unknown algorithm: " + s);
}

std::vector<long> LlpView::bag_sizes() const {
  std::vector<long> sizes(n_bags(), 0);
  for (int b : bag_ids) ++sizes[b];
  return sizes;
}

void LlpView::validate() const {
  if (static_cast<long>(bag_ids.size()) != n_items())
    throw Error("llp view: bag_ids length mismatch");
  if (n_bags() < 1 || n_classes() < 2) throw Error("llp view: bad proportions shape");
  for (int b : bag_ids)
    if (b < 0 || b >= n_bags()) throw Error("llp view: bag id out of range");
  for (long l = 0; l < n_bags(); ++l)
    if (std::abs(proportions.row(l).sum() - 1.0) > 1e-6)
      throw Error("llp view: proportions row " + std::to_string(l) + " not stochastic");
}

LlpView view_of(const LLPInstance& inst) {
  LlpView v;
  v.features = inst.base->features;
  v.bag_ids = inst.bag_ids;
  v.proportions = inst.realized_proportions;
  return v;
}

namespace detail {

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd xb(x.rows(), x.cols() + 1);
  xb << x, Eigen::VectorXd::Ones(x.rows());
  return xb;
}

double hyper(const HyperParams& hp, const std::string& name, double fallback) {
  auto it = hp.find(name);
  return it == hp.end() ? fallback : it->second;
}

}  // namespace detail

LLPModel fit(Algorithm algorithm, const LlpView& train, const HyperParams& hp,
             std::uint64_t seed) {
  train.validate();
  if (algorithm != Algorithm::EMLR && algorithm != Algorithm::DLLP &&
      train.n_classes() != 2)
    throw Error(std::string(to_string(algorithm)) +
                ": mean-map algorithms require binary labels");
  LLPModel model;
  switch (algorithm) {
    case Algorithm::EMLR: model = detail::fit_emlr(train, hp, seed); break;
    case Algorithm::MM: model = detail::fit_mm(train, hp, seed); break;
    case Algorithm::LMM: model = detail::fit_lmm(train, hp, seed); break;
    case Algorithm::AMM: model = detail::fit_amm(train, hp, seed); break;
    case Algorithm::DLLP: model = detail::fit_dllp(train, hp, seed); break;
  }
  model.algorithm = algorithm;
  model.hyperparameters = hp;
  model.n_classes = train.n_classes();
  model.n_features = train.features.cols();
  if (!model.theta.allFinite()) throw Error("fit: non-finite weights");
  for (const auto& w : model.weights)
    if (!w.allFinite()) throw Error("fit: non-finite weights");
  return model;
}

Eigen::MatrixXd predict_probabilities(const LLPModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.n_features) throw Error("predict: feature dimension mismatch");
  const long n = x.rows();
  const int C = model.n_classes;

  if (model.algorithm == Algorithm::DLLP) {
    Eigen::MatrixXd h = x;
    for (std::size_t layer = 0; layer < model.weights.size(); ++layer) {
      h = (h * model.weights[layer].transpose()).rowwise() +
          model.biases[layer].transpose();
      if (layer + 1 < model.weights.size()) h = h.cwiseMax(0.0);  // ReLU
    }
    // row-wise softmax
    Eigen::MatrixXd probs(n, C);
    for (long i = 0; i < n; ++i) {
      Eigen::RowVectorXd row = h.row(i);
      double mx = row.maxCoeff();
      Eigen::RowVectorXd e = (row.array() - mx).exp();
      probs.row(i) = e / e.sum();
    }
    return probs;
  }

  if (model.algorithm == Algorithm::EMLR && C > 2) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        w(model.theta.data(), C, model.n_features + 1);
    Eigen::MatrixXd logits =
        detail::with_bias(x) * w.transpose();  // n x C
    Eigen::MatrixXd probs(n, C);
    for (long i = 0; i < n; ++i) {
      Eigen::RowVectorXd row = logits.row(i);
      double mx = row.maxCoeff();
      Eigen::RowVectorXd e = (row.array() - mx).exp();
      probs.row(i) = e / e.sum();
    }
    return probs;
  }

  Eigen::VectorXd a = detail::with_bias(x) * model.theta;
  Eigen::MatrixXd probs(n, 2);
  for (long i = 0; i < n; ++i) {
    double p = detail::sigmoid(a[i]);
    probs(i, 0) = 1.0 - p;
    probs(i, 1) = p;
  }
  return probs;
}

std::vector<int> predict(const LLPModel& model, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd probs = predict_probabilities(model, x);
  std::vector<int> out(static_cast<std::size_t>(probs.rows()), 0);
  for (long i = 0; i < probs.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, best)) best = c;  // ties keep the lower id
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

Eigen::MatrixXd predict_proportions(const LLPModel& model, const LlpView& view) {
  Eigen::MatrixXd probs = predict_probabilities(model, view.features);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(view.n_bags(), model.n_classes);
  std::vector<long> counts(view.n_bags(), 0);
  for (long i = 0; i < probs.rows(); ++i) {
    sums.row(view.bag_ids[i]) += probs.row(i);
    ++counts[view.bag_ids[i]];
  }
  for (long l = 0; l < view.n_bags(); ++l) {
    if (counts[l] == 0) throw Error("predict_proportions: empty bag " + std::to_string(l));
    sums.row(l) /= static_cast<double>(counts[l]);
  }
  return sums;
}

// ---------------------------------------------------------------------------

std::string model_to_json(const LLPModel& model) {
  nlohmann::ordered_json j;
  j["algorithm"] = to_string(model.algorithm);
  j["hyperparameters"] = model.hyperparameters;
  j["n_classes"] = model.n_classes;
  j["n_features"] = model.n_features;
  j["training_meta"] = {{"iterations", model.training_meta.iterations},
                        {"final_loss", model.training_meta.final_loss}};
  j["theta"] = std::vector<double>(model.theta.data(), model.theta.data() + model.theta.size());
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    const auto& w = model.weights[i];
    nlohmann::ordered_json layer;
    layer["rows"] = w.rows();
    layer["cols"] = w.cols();
    std::vector<double> flat(static_cast<std::size_t>(w.size()));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), w.rows(), w.cols()) = w;
    layer["weights"] = flat;
    layer["bias"] = std::vector<double>(model.biases[i].data(),
                                        model.biases[i].data() + model.biases[i].size());
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  return j.dump(2) + "\n";
}

LLPModel model_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  LLPModel m;
  m.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  m.hyperparameters = j.at("hyperparameters").get<HyperParams>();
  m.n_classes = j.at("n_classes").get<int>();
  m.n_features = j.at("n_features").get<long>();
  m.training_meta.iterations = j.at("training_meta").at("iterations").get<long>();
  m.training_meta.final_loss = j.at("training_meta").at("final_loss").get<double>();
  auto theta = j.at("theta").get<std::vector<double>>();
  m.theta = Eigen::Map<Eigen::VectorXd>(theta.data(), static_cast<long>(theta.size()));
  for (const auto& layer : j.at("layers")) {
    long rows = layer.at("rows").get<long>();
    long cols = layer.at("cols").get<long>();
    auto flat = layer.at("weights").get<std::vector<double>>();
    Eigen::MatrixXd w =
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            flat.data(), rows, cols);
    auto bias = layer.at("bias").get<std::vector<double>>();
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(
        Eigen::Map<Eigen::VectorXd>(bias.data(), static_cast<long>(bias.size())));
  }
  return m;
}

// ---------------------------------------------------------------------------

HyperGrid HyperGrid::paper_preset(Algorithm a) {
  HyperGrid g;
  switch (a) {
    case Algorithm::EMLR:
      g.params = {{"C", {1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}}};
      break;
    case Algorithm::MM:
      g.params = {{"lambda", {0.0, 1.0, 10.0, 100.0}}};
      break;
    case Algorithm::LMM:
      g.params = {{"lambda", {0.0, 1.0, 10.0, 100.0}},
                  {"gamma", {1e-2, 1e-1, 1.0}},
                  {"sigma", {0.25, 0.5, 1.0}}};
      break;
    case Algorithm::AMM:
      // gamma is carried for parity with the published grid; the MM
      // initialization used here does not consume it
      g.params = {{"lambda", {0.0, 1.0, 10.0, 100.0}}, {"gamma", {1e-2, 1e-1, 1.0}}};
      break;
    case Algorithm::DLLP:
      g.params = {{"alpha", {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}}};
      break;
  }
  return g;
}

std::vector<HyperParams> HyperGrid::points() const {
  std::vector<HyperParams> out;
  if (params.empty()) return out;
  for (const auto& [name, values] : params)
    if (values.empty()) throw Error("hyper grid: empty value list for " + name);
  std::vector<std::size_t> idx(params.size(), 0);
  for (;;) {
    HyperParams p;
    for (std::size_t i = 0; i < params.size(); ++i)
      p[params[i].first] = params[i].second[idx[i]];
    out.push_back(std::move(p));
    std::size_t k = params.size();
    while (k > 0) {
      --k;
      if (++idx[k] < params[k].second.size()) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
  }
}

}  // namespace llp
