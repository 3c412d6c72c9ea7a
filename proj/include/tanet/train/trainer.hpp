#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tanet/gan/discriminators.hpp"
#include "tanet/gen/generator.hpp"
#include "tanet/nn/adagrad.hpp"
#include "tanet/train/dataset.hpp"

namespace tanet::train {

enum class StepRole { Generator, AppearanceCritic, MotionCritic };

// Fixed log/CSV spelling of each role.
const char* role_name(StepRole role);

// Alternating update schedule: the appearance critic trains on iterations
// congruent to 1 mod n1, else the motion critic on those congruent to
// 1 mod n2, else the generator. Precedence is exactly this if/elif order.
StepRole schedule_role(int iter, int n1, int n2);

struct TrainingConfig {
    double lambda1 = 0.2; // appearance-adversarial weight in the total loss
    double lambda2 = 0.1; // motion-adversarial weight
    int n1 = 5;           // appearance-critic update period
    int n2 = 3;           // motion-critic update period
    int batch_size = 8;
    double lr_g = 1e-4;
    double lr_a = 1e-4;
    double lr_m = 1e-4;
    int max_iters = 100;
    std::uint64_t seed = 0;
    int checkpoint_every = 0; // 0 disables periodic saving inside run()
    bool two_sided_bce = true;
    bool non_saturating_g = false; // swap log(1-D) for -log D in G's objective

    void validate() const; // ArgumentError on out-of-range settings

    std::map<std::string, std::string> echo() const;
    static TrainingConfig from_echo(const std::map<std::string, std::string>& meta);
};

// Per-iteration loss record. On generator steps total is computed as the
// literal expression bce + lambda1*app_adv + lambda2*mot_adv; critic steps
// carry their own loss in their column and in total.
struct LossBreakdown {
    int iter = 0;
    StepRole role = StepRole::Generator;
    double bce = 0.0;
    double app_adv = 0.0;
    double mot_adv = 0.0;
    double total = 0.0;
};

void write_loss_log(const std::filesystem::path& file, const std::vector<LossBreakdown>& log);

// Batch estimates of the adversarial objectives, forward only. Returns
// {critic_loss, generator_term}: critic_loss = -(mean log D(real) +
// mean log(1 - D(fake))); generator_term = mean log(1 - D(fake)), or
// -mean log D(fake) when non_saturating.
std::pair<double, double> appearance_adversarial_terms(const std::vector<TrainSample>& batch,
                                                       const gen::TanetGenerator& g,
                                                       const gan::AppearanceDiscriminator& da,
                                                       bool non_saturating = false);
std::pair<double, double> motion_adversarial_terms(const std::vector<TrainSample>& batch,
                                                   const gen::TanetGenerator& g,
                                                   const gan::MotionDiscriminator& dm,
                                                   bool non_saturating = false);

// Forward-only evaluation of the generator's composite objective on a batch.
LossBreakdown generator_total_loss(const std::vector<TrainSample>& batch,
                                   const gen::TanetGenerator& g,
                                   const gan::AppearanceDiscriminator& da,
                                   const gan::MotionDiscriminator& dm,
                                   const TrainingConfig& cfg, int iter = 0);

// Same objective with backward: accumulates parameter gradients (into the
// generator and, as a side effect of backpropagation, into both critics —
// callers step only the optimizer they mean to). Throws TrainingError when
// any term turns non-finite, naming the term and iteration.
LossBreakdown generator_loss_and_grads(const std::vector<TrainSample>& batch,
                                       gen::TanetGenerator& g,
                                       gan::AppearanceDiscriminator& da,
                                       gan::MotionDiscriminator& dm, const TrainingConfig& cfg,
                                       int iter);

// Critic objectives with backward. Fake attention maps come from the
// generator forward pass only; no gradient reaches generator parameters.
double appearance_critic_loss_and_grads(const std::vector<TrainSample>& batch,
                                        const gen::TanetGenerator& g,
                                        gan::AppearanceDiscriminator& da, int iter);
double motion_critic_loss_and_grads(const std::vector<TrainSample>& batch,
                                    const gen::TanetGenerator& g, gan::MotionDiscriminator& dm,
                                    int iter);

// Alternating-schedule optimization driver: one adaptive-gradient step per
// iteration on the scheduled network, fresh batch every iteration, fully
// deterministic given the config seed. Checkpoints carry all three
// networks, optimizer accumulators, the sampler state, and the iteration
// counter, so a resumed session continues the exact run.
class TrainSession {
public:
    TrainSession(gen::TanetGenerator g, gan::AppearanceDiscriminator da,
                 gan::MotionDiscriminator dm, TrainingConfig cfg);

    TrainSession(TrainSession&&) = default;
    TrainSession& operator=(TrainSession&&) = delete;

    LossBreakdown step(const ClipDataset& data);

    // Runs from the current iteration to cfg.max_iters, appending to the
    // loss log; checkpoint_dir may be empty when periodic saving is off.
    void run(const ClipDataset& data, const std::filesystem::path& checkpoint_dir = {});

    int iter() const { return iter_; }
    const std::vector<LossBreakdown>& log() const { return log_; }
    const TrainingConfig& config() const { return cfg_; }

    gen::TanetGenerator& generator() { return *g_; }
    gan::AppearanceDiscriminator& appearance_critic() { return *da_; }
    gan::MotionDiscriminator& motion_critic() { return *dm_; }

    void save(const std::filesystem::path& file) const;
    static TrainSession load(const std::filesystem::path& file);

private:
    TrainingConfig cfg_;
    std::unique_ptr<gen::TanetGenerator> g_;
    std::unique_ptr<gan::AppearanceDiscriminator> da_;
    std::unique_ptr<gan::MotionDiscriminator> dm_;
    std::unique_ptr<nn::Adagrad> opt_g_, opt_a_, opt_m_;
    Rng sampler_;
    int iter_ = 0;
    std::vector<LossBreakdown> log_;
};

} // namespace tanet::train
