#include "liftpose/training.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "liftpose/errors.hpp"
#include "liftpose/geometry.hpp"
#include "liftpose/metrics.hpp"
#include "liftpose/ops.hpp"

namespace liftpose {
namespace {

enum Stream : std::uint64_t { kInit = 0, kShuffle = 1, kRotation = 2, kDropout = 3, kFlip = 4 };

const std::string kDiscStore = "D";

std::string lifter_store_name(const LifterModel& lifter, std::size_t i) {
  return "G/" + lifter.subnet_name(i);
}

void require_finite(double value, const char* what, int epoch, std::int64_t step) {
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << what << " is not finite (" << value << ") in epoch " << epoch << " at optimizer step "
        << step;
    throw DivergenceError(msg.str());
  }
}

void restore_store(ParamStore& target, const ParamStore& source, const std::string& name) {
  if (target.entries().size() != source.entries().size()) {
    throw FormatError("checkpoint store '" + name + "' does not match the model layout");
  }
  for (const auto& [pname, p] : source.entries()) {
    if (!target.contains(pname)) {
      throw FormatError("checkpoint store '" + name + "' has unexpected parameter '" + pname + "'");
    }
    Parameter& t = target.at(pname);
    if (t.value.rows() != p.value.rows() || t.value.cols() != p.value.cols() ||
        t.trainable != p.trainable) {
      throw FormatError("checkpoint parameter '" + name + "/" + pname + "' has the wrong shape");
    }
    t = p;
  }
  target.set_step(source.step());
}

}  // namespace

Trainer::Trainer(const TrainConfig& config, const Schema& schema)
    : config_((config.validate(), config)),
      schema_(schema),
      init_rng_(derive_seed(config.seed, kInit)),
      lifter_(config.representation, schema, config.architecture, init_rng_),
      disc_(schema, config.architecture, init_rng_),
      shuffle_rng_(derive_seed(config.seed, kShuffle)),
      rotation_rng_(derive_seed(config.seed, kRotation)),
      dropout_rng_(derive_seed(config.seed, kDropout)),
      flip_rng_(derive_seed(config.seed, kFlip)) {
  adam_.lr = config.learning_rate;
  const auto groups = lifter_.loss_groups();
  if (!config.weights.group_adversarial.empty() &&
      config.weights.group_adversarial.size() != groups.size()) {
    throw ConfigError("representation " + std::string(to_id(config.representation)) + " has " +
                      std::to_string(groups.size()) + " networks but " +
                      std::to_string(config.weights.group_adversarial.size()) +
                      " per-network adversarial weights were given");
  }
}

StepStats Trainer::train_step(const Matrix& x, const Matrix& y) {
  if (x.rows() < 2) throw ConfigError("training batches need at least 2 poses");
  if (x.rows() != y.rows() || x.cols() != schema_.size() || y.cols() != schema_.size()) {
    throw DimensionError("training batch does not match the schema");
  }
  const Eigen::Index batch = x.rows();
  std::vector<RotationMatrix> rotations;
  rotations.reserve(static_cast<std::size_t>(batch));
  for (Eigen::Index i = 0; i < batch; ++i) rotations.push_back(sample_rotation(rotation_rng_).rotation);
  const Matrix table = rotation_table(rotations);

  Tape tape;
  Var vx = tape.constant(x);
  Var vy = tape.constant(y);
  BatchLiftFn lift = [&](Var a, Var b) {
    return lifter_.lift(tape, a, b, Mode::Train, &dropout_rng_);
  };
  CycleOptions cycle_options{config_.renormalize_reprojection, schema_.left_hip(),
                             schema_.right_hip()};
  CycleVars cycle = consistency_cycle(lift, vx, vy, table, cycle_options);
  NinetyResiduals ninety = ninety_degree_residuals(lift, vx, vy, cycle.depth);

  StepStats stats;
  // Discriminator update on real poses vs. the current reprojections.
  {
    Tape dt;
    Var real = disc_.score(dt, dt.constant(x), dt.constant(y), Mode::Train, &dropout_rng_);
    Var fake = disc_.score(dt, dt.constant(cycle.x_fake.value()), dt.constant(cycle.y_fake.value()),
                           Mode::Train, &dropout_rng_);
    stats.flipped = draw_label_flip(flip_rng_, config_.label_flip);
    Var d_loss = lsgan_discriminator_loss(real, fake, stats.flipped);
    stats.d_loss = d_loss.scalar();
    require_finite(stats.d_loss, "discriminator loss", epoch_ + 1, disc_.net().params().step());
    dt.backward(d_loss);
    adam_step(disc_.net().params(), dt.gradients(disc_.net().params()), adam_);
  }

  // Generator update against the updated, frozen discriminator.
  Var fake_scores = disc_.score(tape, cycle.x_fake, cycle.y_fake, Mode::Train, &dropout_rng_,
                                /*track_params=*/false);
  Var adv = lsgan_generator_loss(fake_scores);
  stats.g_loss = adv.scalar();

  const auto groups = lifter_.loss_groups();
  const LossWeights& w = config_.weights;
  std::vector<Var> consistency;
  bool uniform_adv = true;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Var l2d = reprojection_loss(vx, vy, cycle.x_back, cycle.y_back, groups[g].joints);
    Var l90 = ninety_degree_loss(ninety, groups[g].joints);
    stats.group_reprojection.push_back(l2d.scalar());
    stats.group_ninety.push_back(l90.scalar());
    stats.group_loss.push_back(w.adversarial_for(g) * stats.g_loss + w.reprojection * l2d.scalar() +
                               w.ninety * l90.scalar());
    consistency.push_back(ops::add(ops::scale(l2d, w.reprojection), ops::scale(l90, w.ninety)));
    if (w.adversarial_for(g) != w.adversarial_for(0)) uniform_adv = false;
  }
  Var consistency_total = consistency.front();
  for (std::size_t g = 1; g < consistency.size(); ++g) {
    consistency_total = ops::add(consistency_total, consistency[g]);
  }
  for (double v : stats.group_loss) {
    require_finite(v, "generator loss", epoch_ + 1, lifter_.subnet(0).params().step());
  }

  std::vector<Gradients> grads(lifter_.subnet_count());
  if (uniform_adv) {
    Var total = ops::add(consistency_total, ops::scale(adv, w.adversarial_for(0)));
    tape.backward(total);
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] = tape.gradients(lifter_.subnet(i).params());
  } else {
    // Each network receives the shared adversarial term with its own weight.
    tape.backward(consistency_total);
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] = tape.gradients(lifter_.subnet(i).params());
    tape.backward(adv);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const double wg = w.adversarial_for(g);
      for (std::size_t i : groups[g].subnets) {
        Gradients ga = tape.gradients(lifter_.subnet(i).params());
        for (auto& [name, m] : grads[i]) m += wg * ga.at(name);
      }
    }
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    adam_step(lifter_.subnet(i).params(), grads[i], adam_);
  }
  return stats;
}

EpochRecord Trainer::run_epoch(const PoseSet& data, const PoseSet* eval) {
  if (data.size() < 2) throw ConfigError("training set needs at least 2 poses");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, shuffle_rng_);

  EpochRecord rec;
  rec.epoch = epoch_ + 1;
  const std::size_t groups = lifter_.loss_groups().size();
  rec.group_loss.assign(groups, 0.0);
  const std::size_t bs = config_.batch_size;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    const std::size_t count = std::min(bs, order.size() - start);
    if (count < 2) break;
    Matrix x(static_cast<Eigen::Index>(count), data.joints());
    Matrix y(static_cast<Eigen::Index>(count), data.joints());
    for (std::size_t i = 0; i < count; ++i) {
      x.row(static_cast<Eigen::Index>(i)) = data.x.row(static_cast<Eigen::Index>(order[start + i]));
      y.row(static_cast<Eigen::Index>(i)) = data.y.row(static_cast<Eigen::Index>(order[start + i]));
    }
    const StepStats s = train_step(x, y);
    rec.d_loss += s.d_loss;
    rec.g_loss += s.g_loss;
    for (std::size_t g = 0; g < groups; ++g) {
      rec.group_loss[g] += s.group_loss[g];
      rec.reprojection += s.group_reprojection[g];
      rec.ninety += s.group_ninety[g];
    }
    rec.label_flips += s.flipped ? 1 : 0;
    ++rec.steps;
  }
  if (rec.steps > 0) {
    const double inv = 1.0 / static_cast<double>(rec.steps);
    rec.d_loss *= inv;
    rec.g_loss *= inv;
    rec.reprojection *= inv;
    rec.ninety *= inv;
    for (double& v : rec.group_loss) v *= inv;
  }
  ++epoch_;
  if (eval != nullptr) {
    try {
      rec.eval_mpjpe = evaluate(lifter_, *eval).mpjpe;
    } catch (const AlignmentError& e) {
      throw DivergenceError("evaluation after epoch " + std::to_string(epoch_) +
                            " failed: " + e.what());
    }
    require_finite(*rec.eval_mpjpe, "evaluation MPJPE", epoch_, lifter_.subnet(0).params().step());
  }
  return rec;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.header.representation = std::string(to_id(config_.representation));
  ck.header.seed = config_.seed;
  ck.header.config_json = to_json(config_);
  ck.header.config_hash = config_hash(config_);
  ck.header.epoch = epoch_;
  for (std::size_t i = 0; i < lifter_.subnet_count(); ++i) {
    ck.stores.emplace(lifter_store_name(lifter_, i), lifter_.subnet(i).params());
  }
  ck.stores.emplace(kDiscStore, disc_.net().params());
  ck.rng_states = {{"init", init_rng_.state()},
                   {"shuffle", shuffle_rng_.state()},
                   {"rotation", rotation_rng_.state()},
                   {"dropout", dropout_rng_.state()},
                   {"flip", flip_rng_.state()}};
  return ck;
}

Trainer Trainer::from_checkpoint(const Checkpoint& ck, const Schema& schema) {
  TrainConfig config = train_config_from_json(ck.header.config_json);
  if (std::string(to_id(config.representation)) != ck.header.representation) {
    throw FormatError("checkpoint header and configuration disagree on the representation");
  }
  Trainer t(config, schema);
  for (std::size_t i = 0; i < t.lifter_.subnet_count(); ++i) {
    const std::string name = lifter_store_name(t.lifter_, i);
    auto it = ck.stores.find(name);
    if (it == ck.stores.end()) throw FormatError("checkpoint is missing store '" + name + "'");
    restore_store(t.lifter_.subnet(i).params(), it->second, name);
  }
  auto d = ck.stores.find(kDiscStore);
  if (d == ck.stores.end()) throw FormatError("checkpoint is missing the discriminator");
  restore_store(t.disc_.net().params(), d->second, kDiscStore);
  auto rng = [&](const char* name, Rng& target) {
    auto it = ck.rng_states.find(name);
    if (it == ck.rng_states.end()) throw FormatError(std::string("checkpoint is missing stream ") + name);
    target.restore(it->second);
  };
  rng("init", t.init_rng_);
  rng("shuffle", t.shuffle_rng_);
  rng("rotation", t.rotation_rng_);
  rng("dropout", t.dropout_rng_);
  rng("flip", t.flip_rng_);
  t.epoch_ = static_cast<int>(ck.header.epoch);
  return t;
}

LifterModel load_lifter(const Checkpoint& ck, const Schema& schema,
                        std::optional<Representation> expected) {
  const Representation rep = parse_representation(ck.header.representation);
  if (expected && *expected != rep) {
    throw ConfigError("checkpoint holds representation '" + ck.header.representation +
                      "', expected '" + std::string(to_id(*expected)) + "'");
  }
  return Trainer::from_checkpoint(ck, schema).lifter();
}

TrainResult train(const PoseSet& data, const TrainConfig& config, const Schema& schema,
                  const PoseSet* eval, const TrainOutput& output) {
  if (data.size() == 0) throw ConfigError("training set is empty");
  if (data.joints() != schema.size()) throw DimensionError("training set does not match the schema");
  Trainer trainer(config, schema);
  RunRecord record;
  record.seed = config.seed;
  record.config_json = to_json(config);
  record.config_hash = config_hash(config);
  for (const auto& g : trainer.lifter().loss_groups()) record.group_names.push_back(g.name);

  const bool write = !output.directory.empty();
  if (write) std::filesystem::create_directories(output.directory);
  const auto last_good = output.directory / "last.ckpt";

  for (int e = 0; e < config.epochs; ++e) {
    try {
      record.epochs.push_back(trainer.run_epoch(data, eval));
    } catch (const DivergenceError& err) {
      record.aborted = true;
      record.abort_reason = err.what();
      std::string msg = std::string("training diverged: ") + err.what();
      if (write) {
        write_run_record(output.directory / "run.jsonl", record);
        msg += record.epochs.empty() ? "; no completed epoch to checkpoint"
                                     : "; last good checkpoint: " + last_good.string();
      }
      throw DivergenceError(msg);
    }
    if (write) {
      const Checkpoint ck = trainer.checkpoint();
      save_checkpoint(last_good, ck);
      if (config.checkpoint_every > 0 && (e + 1) % config.checkpoint_every == 0) {
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", e + 1);
        save_checkpoint(output.directory / name, ck);
        record.checkpoints.push_back(name);
      }
    }
  }
  if (write) {
    save_checkpoint(output.directory / "model.ckpt", trainer.checkpoint());
    record.checkpoints.push_back("model.ckpt");
    write_run_record(output.directory / "run.jsonl", record);
  }
  return TrainResult{std::move(record), std::move(trainer)};
}

}  // namespace liftpose
