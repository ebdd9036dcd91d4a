#include "longview/thvae/train.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "longview/thvae/checkpoint.hpp"

namespace longview::thvae {

using nlohmann::json;

TrainingReport train(const TrainCorpus& corpus, ThVaeModel& model, const TrainOptions& options) {
    if (corpus.empty()) throw ArgumentError("train: empty corpus");
    if (options.steps < 1) throw ArgumentError("train: steps must be >= 1");

    struct Item {
        std::vector<int> tokens;
        std::vector<std::string> phrases;
    };
    std::vector<Item> items;
    items.reserve(corpus.size());
    for (const auto& [segment, phrases] : corpus) {
        items.push_back({model.tokenize_segment(segment), phrases.texts()});
    }

    Rng noise_rng(options.seed);
    ad::AdamOptions adam;
    adam.learning_rate = model.config().learning_rate;

    TrainingReport report;
    const auto epoch_len = static_cast<std::int64_t>(items.size());
    const int warmup = model.config().kl_warmup_steps;

    for (std::int64_t step = 0; step < options.steps; ++step) {
        const Item& item = items[static_cast<size_t>(step % epoch_len)];
        std::int64_t global_step = model.training_step_count();
        double beta = warmup == 0
                          ? 1.0
                          : std::min(1.0, static_cast<double>(global_step) / warmup);

        std::vector<ad::Tensor> noise;
        for (int i = 0; i < model.config().num_latents; ++i) {
            noise.push_back(ad::Tensor::randn(1, model.config().latent_dim, noise_rng, 1.0));
        }

        ad::Session session(model.params(), /*training=*/true, /*grad_enabled=*/true);
        ThVaeModel::LossVars loss = model.build_loss(session, item.tokens, item.phrases, beta, noise);

        TrainStepRecord record;
        record.step = global_step + 1;
        record.recon_nll = loss.recon->val.v[0];
        for (const ad::Var& kl : loss.kls) record.kl.push_back(std::max(0.0, kl->val.v[0]));
        record.beta = beta;
        record.total = loss.total->val.v[0];

        if (!std::isfinite(record.total)) {
            throw TrainingInstabilityError(
                "training diverged at step " + std::to_string(record.step), -1);
        }

        ad::backward(loss.total);
        ad::adam_step(session, adam, model.training_step_count() + 1);
        model.set_training_step_count(model.training_step_count() + 1);

        if (!model.params().all_finite()) {
            throw TrainingInstabilityError(
                "non-finite parameters after step " + std::to_string(record.step), -1);
        }

        report.records.push_back(std::move(record));
        if (!options.checkpoint_path.empty() && (step + 1) % epoch_len == 0) {
            save_checkpoint(model, options.checkpoint_path);
        }
    }

    report.initial_loss = report.records.front().total;
    report.final_loss = report.records.back().total;
    report.steps_run = options.steps;

    if (!options.checkpoint_path.empty()) save_checkpoint(model, options.checkpoint_path);
    if (!options.report_path.empty()) {
        std::ofstream out(options.report_path, std::ios::trunc);
        if (!out) throw IoError("cannot write training report: " + options.report_path);
        out << training_report_to_jsonl(report);
    }
    return report;
}

std::string training_report_to_jsonl(const TrainingReport& report) {
    std::ostringstream out;
    for (const TrainStepRecord& r : report.records) {
        json obj = {{"step", r.step},
                    {"recon_nll", r.recon_nll},
                    {"kl", r.kl},
                    {"beta", r.beta},
                    {"total", r.total}};
        out << obj.dump() << '\n';
    }
    return out.str();
}

}  // namespace longview::thvae
