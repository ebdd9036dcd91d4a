#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "longview/keyphrase.hpp"
#include "longview/thvae/model.hpp"
#include "longview/timeline.hpp"

namespace longview::thvae {

struct TrainStepRecord {
    std::int64_t step = 0;
    double recon_nll = 0.0;
    std::vector<double> kl;
    double beta = 0.0;
    double total = 0.0;
};

struct TrainOptions {
    std::int64_t steps = 300;
    std::uint64_t seed = 0;
    std::string checkpoint_path;  // written every epoch and at the end when set
    std::string report_path;      // JSONL {step, recon_nll, kl, beta, total}
};

struct TrainingReport {
    std::vector<TrainStepRecord> records;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::int64_t steps_run = 0;
};

using TrainCorpus = std::vector<std::pair<core::Segment, keyphrase::KeyPhraseSet>>;

// Adam at config.learning_rate; beta warmed linearly 0 -> 1 over
// config.kl_warmup_steps; one segment per step in corpus order. Deterministic
// for a fixed seed. Divergence aborts with TrainingInstabilityError; the last
// epoch checkpoint stays on disk.
TrainingReport train(const TrainCorpus& corpus, ThVaeModel& model, const TrainOptions& options);

std::string training_report_to_jsonl(const TrainingReport& report);

}  // namespace longview::thvae
