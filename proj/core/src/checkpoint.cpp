#include "popgcn/checkpoint.hpp"

#include "popgcn/util.hpp"

#include <json.hpp>

namespace popgcn {
namespace {

using Json = nlohmann::ordered_json;

Json matrix_json(const Matrix& m) {
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Matrix matrix_from(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error("checkpoint: matrix size mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

Json train_config_json(const TrainConfig& c) {
  Json j;
  j["loss"] = to_string(c.loss);
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["l2_reg"] = c.l2_reg;
  j["negatives_per_positive"] = c.negatives_per_positive;
  j["seed"] = c.seed;
  return j;
}

TrainConfig train_config_from(const nlohmann::json& j) {
  TrainConfig c;
  c.loss = parse_loss_kind(j.at("loss").get<std::string>());
  c.epochs = j.at("epochs").get<Index>();
  c.batch_size = j.at("batch_size").get<Index>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.l2_reg = j.at("l2_reg").get<double>();
  c.negatives_per_positive = j.at("negatives_per_positive").get<Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Json dap_json(const DapConfig& c) {
  Json j;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["clusters"] = c.clusters;
  j["pooling"] = to_string(c.pooling);
  j["similarity"] = to_string(c.similarity);
  j["neighborhood"] = to_string(c.neighborhood);
  j["use_similarity"] = c.use_similarity;
  j["clamp_negative_similarity"] = c.clamp_negative_similarity;
  j["seed"] = c.seed;
  j["kmeans_max_iters"] = c.kmeans_max_iters;
  j["kmeans_tol"] = c.kmeans_tol;
  return j;
}

DapConfig dap_from(const nlohmann::json& j) {
  DapConfig c;
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.clusters = j.at("clusters").get<Index>();
  c.pooling = parse_pooling(j.at("pooling").get<std::string>());
  c.similarity = parse_similarity(j.at("similarity").get<std::string>());
  c.neighborhood = parse_neighborhood(j.at("neighborhood").get<std::string>());
  c.use_similarity = j.at("use_similarity").get<bool>();
  c.clamp_negative_similarity = j.at("clamp_negative_similarity").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.kmeans_max_iters = j.at("kmeans_max_iters").get<Index>();
  c.kmeans_tol = j.at("kmeans_tol").get<double>();
  return c;
}

}  // namespace

std::string checkpoint_json(const Checkpoint& cp, bool include_layers) {
  Json j;
  j["format"] = "popgcn-checkpoint";
  j["version"] = 1;
  j["num_users"] = cp.state.num_users;
  j["num_items"] = cp.state.num_items;
  j["layers"] = cp.model.layers;
  j["dim"] = cp.model.dim;
  j["seed"] = cp.model.seed;
  j["init_scale"] = cp.model.init_scale;
  if (cp.train_config) {
    Json t;
    t["config"] = train_config_json(*cp.train_config);
    t["epochs_done"] = cp.progress.epochs_done;
    t["loss_curve"] = cp.progress.loss_curve;
    const auto& opt = cp.progress.optimizer;
    t["adam_steps"] = opt.steps();
    if (opt.steps() > 0) {
      t["adam_m"] = matrix_json(opt.first_moment());
      t["adam_v"] = matrix_json(opt.second_moment());
    }
    j["training"] = std::move(t);
  }
  if (cp.dap) j["dap"] = dap_json(*cp.dap);
  j["layer0"] = matrix_json(cp.state.layer0);
  if (include_layers && cp.state.forwarded()) {
    Json layers = Json::array();
    for (const auto& layer : cp.state.layers) layers.push_back(matrix_json(layer));
    j["propagated"] = std::move(layers);
    j["combined"] = matrix_json(cp.state.combined);
  }
  return j.dump() + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint, bool include_layers) {
  write_text_file(path, checkpoint_json(checkpoint, include_layers));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint " + path.string() + ": " + e.what());
  }
  if (j.value("format", std::string{}) != "popgcn-checkpoint") throw Error(path.string() + " is not a popgcn checkpoint");

  Checkpoint cp;
  cp.model.layers = j.at("layers").get<Index>();
  cp.model.dim = j.at("dim").get<Index>();
  cp.model.seed = j.at("seed").get<std::uint64_t>();
  cp.model.init_scale = j.at("init_scale").get<double>();
  cp.state.num_users = j.at("num_users").get<Index>();
  cp.state.num_items = j.at("num_items").get<Index>();
  cp.state.num_layers = cp.model.layers;
  cp.state.layer0 = matrix_from(j.at("layer0"));
  if (cp.state.layer0.rows() != cp.state.num_users + cp.state.num_items || cp.state.layer0.cols() != cp.model.dim) {
    throw Error("checkpoint " + path.string() + ": layer0 shape does not match metadata");
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    cp.train_config = train_config_from(t.at("config"));
    cp.progress.epochs_done = t.at("epochs_done").get<Index>();
    cp.progress.loss_curve = t.at("loss_curve").get<std::vector<double>>();
    const auto steps = t.at("adam_steps").get<std::uint64_t>();
    if (steps > 0) cp.progress.optimizer.restore(steps, matrix_from(t.at("adam_m")), matrix_from(t.at("adam_v")));
  }
  if (j.contains("dap")) cp.dap = dap_from(j.at("dap"));
  return cp;
}

}  // namespace popgcn
