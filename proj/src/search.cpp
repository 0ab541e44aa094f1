#include "sagnas/search.hpp"

#include "sagnas/adam.hpp"
#include "sagnas/errors.hpp"
#include "sagnas/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>

namespace sagnas {

void SearchConfig::validate() const {
  if (epochs_search < 0 || epochs_eval < 0) throw ConfigError("epochs must be non-negative");
  if (!(lr_w > 0) || !(lr_alpha > 0)) throw ConfigError("learning rates must be positive");
  if (weight_decay < 0) throw ConfigError("weight decay must be non-negative");
  if (lambda < 0) throw ConfigError("lambda must be non-negative");
  if (!(train_ratio > 0 && train_ratio < 1)) throw ConfigError("train_ratio must lie in (0, 1)");
}

SearchSplit make_search_split(const Graph& data, double train_ratio, std::uint64_t seed) {
  std::vector<Index> labeled;
  for (Index v = 0; v < data.num_nodes(); ++v)
    if (data.split()[v] == NodeSplit::train || data.split()[v] == NodeSplit::val) labeled.push_back(v);
  Rng rng(seed);
  for (std::size_t i = labeled.size(); i > 1; --i) std::swap(labeled[i - 1], labeled[uniform_index(rng, i)]);
  const auto n_w = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(labeled.size())));
  SearchSplit s;
  s.weight_rows.assign(labeled.begin(), labeled.begin() + static_cast<std::ptrdiff_t>(n_w));
  s.alpha_rows.assign(labeled.begin() + static_cast<std::ptrdiff_t>(n_w), labeled.end());
  std::sort(s.weight_rows.begin(), s.weight_rows.end());
  std::sort(s.alpha_rows.begin(), s.alpha_rows.end());
  if (s.weight_rows.empty() || s.alpha_rows.empty())
    throw DataError("search needs nonempty train and validation node sets");
  return s;
}

double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const Index> rows) {
  if (rows.empty()) return 0.0;
  std::size_t hit = 0;
  for (Index r : rows) {
    Index best = 0;
    for (Index c = 1; c < logits.cols(); ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    if (best == labels[static_cast<std::size_t>(r)]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(rows.size());
}

namespace {

AdamOptions weight_options(const SearchConfig& cfg) {
  AdamOptions o;
  o.lr = cfg.lr_w;
  o.weight_decay = cfg.weight_decay;
  return o;
}

AdamOptions alpha_options(const SearchConfig& cfg) {
  AdamOptions o;
  o.lr = cfg.lr_alpha;
  o.beta1 = 0.5;
  return o;
}

SearchTrace bilevel(SupernetModel& model, const Graph& data, const GraphOperators& graph, const SearchSplit& split,
                    const SearchConfig& cfg, double lambda) {
  auto weights = model.weight_parameters();
  auto alphas = model.alpha_parameters();
  AdamState w_state(weight_options(cfg));
  AdamState a_state(alpha_options(cfg));
  SearchTrace trace;
  for (int epoch = 0; epoch < cfg.epochs_search; ++epoch) {
    try {
      {
        zero_grads(weights);
        Tape tape;
        Tensor logits = model.forward(tape, data.features(), graph, {.train_weights = true, .train_alpha = false});
        Tensor loss = masked_cross_entropy(logits, data.labels(), split.weight_rows);
        trace.train_loss.push_back(loss.value()(0, 0));
        tape.backward(loss);
        adam_step(weights, w_state);
        if (cfg.observer) cfg.observer(model, epoch, SearchPhase::weights);
      }
      if (!alphas.empty()) {
        zero_grads(alphas);
        Tape tape;
        Tensor logits = model.forward(tape, data.features(), graph, {.train_weights = false, .train_alpha = true});
        Tensor objective = masked_cross_entropy(logits, data.labels(), split.alpha_rows);
        if (lambda > 0.0) objective = add(objective, mul_scalar(model.entropy_regularizer(tape, true), lambda));
        trace.val_loss.push_back(objective.value()(0, 0));
        tape.backward(objective);
        adam_step(alphas, a_state);
        if (cfg.observer) cfg.observer(model, epoch, SearchPhase::alpha);
      }
    } catch (const NumericalError& e) {
      throw NumericalError("search epoch " + std::to_string(epoch) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace

SearchResult darts_search(const Graph& data, const CellTopology& topology, const OpSpace& ops, Index hidden,
                          int cells, const SearchConfig& cfg, NodeNorm node_norm) {
  cfg.validate();
  const SearchSplit split = make_search_split(data, cfg.train_ratio, derive_seed(cfg.seed, "search.split"));
  SupernetModel model(topology, ops, ModelShape{data.feature_dim(), hidden, data.num_classes(), cells, node_norm},
                      derive_seed(cfg.seed, "search.model"));
  const GraphOperators graph = GraphOperators::build(data);
  SearchTrace trace = bilevel(model, data, graph, split, cfg, 0.0);
  DerivedArchitecture arch = discretize(model);
  return SearchResult{std::move(model), std::move(arch), std::move(trace)};
}

SearchTrace localized_search(SupernetModel& model, std::span<const int> trainable_edges, const Graph& data,
                             const SearchConfig& cfg) {
  cfg.validate();
  if (trainable_edges.empty()) throw std::invalid_argument("localized_search: empty trainable edge set");
  const std::set<int> allowed(trainable_edges.begin(), trainable_edges.end());
  const auto n_edges = static_cast<int>(model.alphas().edges.size());
  for (int e : allowed)
    if (e < 0 || e >= n_edges || !model.alphas().edges[static_cast<std::size_t>(e)].trainable())
      throw std::invalid_argument("localized_search: edge " + std::to_string(e) + " is not a trainable edge");
  for (int e = 0; e < n_edges; ++e)
    if (!allowed.count(e) && model.alphas().edges[static_cast<std::size_t>(e)].trainable())
      throw std::invalid_argument("localized_search: edge " + std::to_string(e) + " outside the set is not frozen");
  const SearchSplit split = make_search_split(data, cfg.train_ratio, derive_seed(cfg.seed, "search.split"));
  const GraphOperators graph = GraphOperators::build(data);
  return bilevel(model, data, graph, split, cfg, cfg.lambda);
}

EvalResult train_eval(const DerivedArchitecture& arch, const Graph& data, const SearchConfig& cfg, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const auto train = data.nodes_in(NodeSplit::train);
  const auto val = data.nodes_in(NodeSplit::val);
  const auto test = data.nodes_in(NodeSplit::test);
  if (train.empty() || val.empty()) throw DataError("train_eval needs nonempty train and val masks");
  SupernetModel model = SupernetModel::from_architecture(arch, data.feature_dim(), data.num_classes(),
                                                         derive_seed(seed, "eval.model"));
  const GraphOperators graph = GraphOperators::build(data);
  auto weights = model.weight_parameters();
  AdamState state(weight_options(cfg));
  EvalResult result;
  result.seed = seed;
  for (int epoch = 0; epoch < cfg.epochs_eval; ++epoch) {
    zero_grads(weights);
    Tape tape;
    Tensor logits = model.forward(tape, data.features(), graph, {.train_weights = true, .train_alpha = false});
    Tensor loss = masked_cross_entropy(logits, data.labels(), train);
    result.loss_curve.push_back(loss.value()(0, 0));
    tape.backward(loss);
    adam_step(weights, state);
  }
  Tape tape;
  const Matrix logits = model.forward(tape, data.features(), graph, {.train_weights = false, .train_alpha = false}).value();
  result.val_accuracy = accuracy(logits, data.labels(), val);
  if (!test.empty()) result.test_accuracy = accuracy(logits, data.labels(), test);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace sagnas
