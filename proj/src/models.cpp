#include "liftpose/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "liftpose/errors.hpp"
#include "liftpose/ops.hpp"

namespace liftpose {
namespace {

struct RepInfo {
  Representation rep;
  const char* id;
};

constexpr RepInfo kReps[] = {
    {Representation::Full, "full"},
    {Representation::SplitRecombineLegTorso, "sr-lt"},
    {Representation::IndependentLegTorso, "ind-lt"},
    {Representation::SplitRecombineFiveLimbs, "sr-5"},
    {Representation::IndependentFiveLimbs, "ind-5"},
};

std::vector<int> all_joints(const Schema& schema) {
  std::vector<int> j(schema.size());
  for (int i = 0; i < schema.size(); ++i) j[i] = i;
  return j;
}

std::size_t abs_diff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

/// Integer width in [1, 2 * base] whose plan count is closest to `target`.
template <typename CountFn>
int solve_width(int base, std::size_t target, CountFn&& count) {
  int best = 1;
  std::size_t best_err = abs_diff(count(1), target);
  for (int w = 2; w <= 2 * base; ++w) {
    const std::size_t err = abs_diff(count(w), target);
    if (err < best_err) {
      best = w;
      best_err = err;
    }
  }
  return best;
}

}  // namespace

std::string_view to_id(Representation rep) {
  for (const auto& info : kReps) {
    if (info.rep == rep) return info.id;
  }
  return "unknown";
}

Representation parse_representation(std::string_view id) {
  for (const auto& info : kReps) {
    if (id == info.id) return info.rep;
  }
  throw ConfigError("unknown representation '" + std::string(id) +
                    "' (expected one of: full, sr-lt, ind-lt, sr-5, ind-5)");
}

const std::vector<Representation>& all_representations() {
  static const std::vector<Representation> reps = {
      Representation::Full, Representation::SplitRecombineLegTorso,
      Representation::IndependentLegTorso, Representation::SplitRecombineFiveLimbs,
      Representation::IndependentFiveLimbs};
  return reps;
}

bool is_independent(Representation rep) {
  return rep == Representation::IndependentLegTorso || rep == Representation::IndependentFiveLimbs;
}

std::optional<PartitionId> partition_of(Representation rep) {
  switch (rep) {
    case Representation::Full:
      return std::nullopt;
    case Representation::SplitRecombineLegTorso:
    case Representation::IndependentLegTorso:
      return PartitionId::LegTorso;
    case Representation::SplitRecombineFiveLimbs:
    case Representation::IndependentFiveLimbs:
      return PartitionId::FiveLimbs;
  }
  return std::nullopt;
}

ArchitectureConfig ArchitectureConfig::large() { return ArchitectureConfig{}; }

ArchitectureConfig ArchitectureConfig::desk() {
  ArchitectureConfig a;
  a.base_width = 64;
  a.feature_width = 16;
  a.disc_width = 64;
  return a;
}

std::size_t LifterPlan::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : locals) n += mlp_parameter_count(s.spec);
  if (combiner) n += mlp_parameter_count(combiner->spec);
  return n;
}

int LifterPlan::max_path_blocks() const {
  int local = 0;
  for (const auto& s : locals) local = std::max(local, s.spec.blocks);
  return local + (combiner ? combiner->spec.blocks : 0);
}

LifterPlan plan_lifter(Representation rep, const Schema& schema, const ArchitectureConfig& arch) {
  if (arch.base_width <= 0 || arch.full_blocks < 0 || arch.local_blocks < 0 ||
      arch.combiner_blocks < 0 || arch.feature_width <= 0) {
    throw ConfigError("architecture dimensions must be positive");
  }
  const int n = schema.size();
  const MlpSpec full{2 * n, arch.base_width, arch.full_blocks, n, arch.dropout};
  LifterPlan plan;
  plan.representation = rep;
  const auto partition = partition_of(rep);
  if (!partition) {
    plan.locals.push_back({"full", all_joints(schema), full});
    return plan;
  }

  const std::size_t target = mlp_parameter_count(full);
  const auto& segments = schema.partition(*partition);
  auto build = [&](int w) {
    LifterPlan p;
    p.representation = rep;
    for (const Segment& seg : segments) {
      const int k = static_cast<int>(seg.joints.size());
      MlpSpec spec = is_independent(rep)
                         ? MlpSpec{2 * k, w, arch.full_blocks, k, arch.dropout}
                         : MlpSpec{2 * k, w, arch.local_blocks, arch.feature_width, arch.dropout};
      p.locals.push_back({seg.name, seg.joints, spec});
    }
    if (!is_independent(rep)) {
      const int features = static_cast<int>(segments.size()) * arch.feature_width;
      p.combiner = SubnetPlan{
          "combiner", {}, MlpSpec{features, arch.base_width, arch.combiner_blocks, n, arch.dropout}};
    }
    return p;
  };
  const int width =
      solve_width(arch.base_width, target, [&](int w) { return build(w).parameter_count(); });
  return build(width);
}

LifterModel::LifterModel(Representation rep, const Schema& schema, const ArchitectureConfig& arch,
                         Rng& init)
    : schema_(schema), arch_(arch), plan_(plan_lifter(rep, schema, arch)) {
  for (const auto& s : plan_.locals) {
    nets_.emplace_back(s.spec, init);
    names_.push_back(s.name);
  }
  if (plan_.combiner) {
    nets_.emplace_back(plan_.combiner->spec, init);
    names_.push_back(plan_.combiner->name);
  }
  if (is_independent(rep)) {
    inverse_order_.assign(schema_.size(), -1);
    int pos = 0;
    for (const auto& s : plan_.locals) {
      for (int j : s.joints) inverse_order_[j] = pos++;
    }
  }
}

std::size_t LifterModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& net : nets_) n += net.parameter_count();
  return n;
}

std::vector<LossGroup> LifterModel::loss_groups() const {
  std::vector<LossGroup> groups;
  if (is_independent(representation())) {
    for (std::size_t i = 0; i < plan_.locals.size(); ++i) {
      groups.push_back({plan_.locals[i].name, {i}, plan_.locals[i].joints});
    }
    return groups;
  }
  LossGroup all{"all", {}, all_joints(schema_)};
  for (std::size_t i = 0; i < nets_.size(); ++i) all.subnets.push_back(i);
  groups.push_back(std::move(all));
  return groups;
}

template <typename NetFn>
Var LifterModel::lift_impl(Tape& tape, Var x, Var y, NetFn&& run_net) const {
  const int n = schema_.size();
  if (x.cols() != n || y.cols() != n || x.rows() != y.rows()) {
    throw DimensionError("lift: expected two B x " + std::to_string(n) + " coordinate batches");
  }
  (void)tape;
  if (representation() == Representation::Full) {
    return run_net(0, ops::concat_cols({x, y}));
  }
  std::vector<Var> outs;
  for (std::size_t i = 0; i < plan_.locals.size(); ++i) {
    const auto& joints = plan_.locals[i].joints;
    Var input = ops::concat_cols({ops::gather_cols(x, joints), ops::gather_cols(y, joints)});
    outs.push_back(run_net(i, input));
  }
  if (plan_.combiner) {
    return run_net(plan_.locals.size(), ops::concat_cols(outs));
  }
  return ops::gather_cols(ops::concat_cols(outs), inverse_order_);
}

Var LifterModel::lift(Tape& tape, Var x, Var y, Mode mode, Rng* dropout_rng, bool track_params) {
  return lift_impl(tape, x, y, [&](std::size_t i, Var input) {
    return nets_[i].forward(tape, input, mode, dropout_rng, track_params);
  });
}

Matrix LifterModel::lift(const Matrix& x, const Matrix& y) const {
  Tape tape;
  Var out = lift_impl(tape, tape.constant(x), tape.constant(y), [&](std::size_t i, Var input) {
    return tape.constant(nets_[i].infer(input.value()));
  });
  return out.value();
}

Vector LifterModel::lift(const Pose2D& pose) const {
  if (pose.coords.rows() != schema_.size() || pose.coords.cols() != 2) {
    throw DimensionError("lift: pose does not match the schema");
  }
  Matrix x = pose.coords.col(0).transpose();
  Matrix y = pose.coords.col(1).transpose();
  return lift(x, y).row(0).transpose();
}

Discriminator::Discriminator(const Schema& schema, const ArchitectureConfig& arch, Rng& init)
    : joints_(schema.size()),
      net_(MlpSpec{2 * schema.size(), arch.disc_width, arch.disc_blocks, 1, arch.dropout}, init) {}

Var Discriminator::score(Tape& tape, Var x, Var y, Mode mode, Rng* dropout_rng, bool track_params) {
  if (x.cols() != joints_ || y.cols() != joints_ || x.rows() != y.rows()) {
    throw DimensionError("discriminator needs full " + std::to_string(joints_) +
                         "-joint poses, got " + std::to_string(x.cols()) + " joints");
  }
  return net_.forward(tape, ops::concat_cols({x, y}), mode, dropout_rng, track_params);
}

Matrix Discriminator::score(const Matrix& x, const Matrix& y) const {
  if (x.cols() != joints_ || y.cols() != joints_ || x.rows() != y.rows()) {
    throw DimensionError("discriminator needs full " + std::to_string(joints_) +
                         "-joint poses, got " + std::to_string(x.cols()) + " joints");
  }
  Matrix input(x.rows(), 2 * joints_);
  input << x, y;
  return net_.infer(input);
}

double Discriminator::score(const Pose2D& pose) const {
  if (pose.coords.cols() != 2) throw DimensionError("discriminator needs a 2D pose");
  Matrix x = pose.coords.col(0).transpose();
  Matrix y = pose.coords.col(1).transpose();
  return score(x, y)(0, 0);
}

}  // namespace liftpose
