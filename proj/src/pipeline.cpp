#include "semcom/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "semcom/channel.hpp"
#include "semcom/error.hpp"
#include "semcom/inversion.hpp"
#include "semcom/rng.hpp"

namespace semcom {

LinkState LinkState::cold(const SimulationConfig& cfg) {
  LinkState link;
  link.tx_cache = CacheMemory(cfg.latent.n_slots, cfg.latent.slot_len,
                              cfg.cache_capacity);
  link.rx_cache = link.tx_cache;
  return link;
}

TransmitResult transmit_image(const Image& x, const SemanticLatent* truth,
                              LinkState& link, const GeneratorModel& model,
                              const SimulationConfig& cfg) {
  const LatentShape shape = cfg.latent;
  const std::size_t index = link.images_sent;

  // (1) semantic latent
  SemanticLatent z;
  if (cfg.mode == SimulationMode::latent_only) {
    if (!truth) throw InvalidArgument("latent_only mode needs a source latent");
    if (truth->shape() != shape) {
      throw InvalidArgument("source latent shape does not match config");
    }
    z = SemanticLatent(shape, power_normalize(truth->values()).values);
  } else {
    InversionConfig inv = cfg.inversion;
    inv.snr_db = cfg.snr_db;
    z = invert(model, x, inv, derive_seed(cfg.master_seed, "inversion", index))
            .latent;
  }

  // (2) cache decisions against the transmitter cache
  TransmissionPlan plan = plan_transmission(z, link.tx_cache, cfg.thresholds);

  // (4) one power-normalized payload block over the kept vectors
  std::vector<double> payload;
  payload.reserve(plan.n_s() * shape.slot_len);
  for (const auto& k : plan.kept) {
    payload.insert(payload.end(), k.vector.begin(), k.vector.end());
  }
  if (!payload.empty()) {
    payload = power_normalize(payload).values;
    for (std::size_t m = 0; m < plan.kept.size(); ++m) {
      std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(m * shape.slot_len),
                  shape.slot_len, plan.kept[m].vector.begin());
    }
  }

  // (3) transmitter stores what it sends
  tx_update(link.tx_cache, plan);

  // (5) AWGN on the analog payload
  const ChannelConfig channel{cfg.snr_db,
                              derive_seed(cfg.master_seed, "channel")};
  const auto received_flat = unpack_complex_to_real(
      transmit(pack_real_to_complex(payload), channel, index));
  std::vector<std::vector<double>> received(plan.n_s());
  for (std::size_t m = 0; m < received.size(); ++m) {
    const auto first = received_flat.begin() +
                       static_cast<std::ptrdiff_t>(m * shape.slot_len);
    received[m].assign(first, first + static_cast<std::ptrdiff_t>(shape.slot_len));
  }

  // (6) indices go over the reliable side channel
  double index_symbols = 0.0;
  if (cfg.side_channel.sample_retransmissions) {
    CounterRng rng(derive_seed(cfg.master_seed, "side_channel", index));
    index_symbols = sampled_index_cost_symbols(
        plan.hits.size(), shape.n_slots, cfg.cache_capacity,
        cfg.side_channel, rng);
  } else {
    index_symbols = index_cost_symbols(plan.hits.size(), shape.n_slots,
                                       cfg.cache_capacity, cfg.side_channel);
  }
  if (link.index_tamper) link.index_tamper(plan);

  // (7) receiver
  SemanticLatent z_hat =
      rx_reconstruct(shape, received, plan.hits, link.rx_cache);

  // (8) generation
  Image x_hat = model.forward(z_hat).clamped();

  TransmissionRecord rec;
  rec.image_index = index;
  rec.n_s = plan.n_s();
  rec.payload_symbols = plan.n_s() * shape.slot_len / 2;
  rec.index_symbols = index_symbols;
  rec.k_total = static_cast<double>(rec.payload_symbols) + index_symbols;
  rec.bcr = bcr(rec.k_total, cfg.image);
  rec.psnr_db = psnr(x, x_hat);
  rec.perceptual_distance = perceptual_distance(FeatureExtractor{}, x, x_hat);
  rec.hits = plan.hits;

  ++link.images_sent;
  return {std::move(x_hat), std::move(z_hat), std::move(rec)};
}

std::vector<double> moving_average(const std::vector<double>& values,
                                   std::size_t window) {
  if (window == 0) throw InvalidArgument("moving average window must be >= 1");
  std::vector<double> out(values.size());
  for (std::size_t n = 0; n < values.size(); ++n) {
    const std::size_t lo = n + 1 > window ? n + 1 - window : 0;
    double s = 0.0;
    for (std::size_t k = lo; k <= n; ++k) s += values[k];
    out[n] = s / static_cast<double>(n + 1 - lo);
  }
  return out;
}

RunSummary summarize(const std::vector<TransmissionRecord>& records,
                     std::size_t window) {
  RunSummary s;
  s.window = window;
  s.num_images = records.size();
  if (records.empty()) return s;
  std::vector<double> bcrs;
  bcrs.reserve(records.size());
  s.min_bcr = records.front().bcr;
  s.max_bcr = records.front().bcr;
  for (const auto& r : records) {
    bcrs.push_back(r.bcr);
    s.mean_bcr += r.bcr;
    s.min_bcr = std::min(s.min_bcr, r.bcr);
    s.max_bcr = std::max(s.max_bcr, r.bcr);
    s.mean_psnr_db += r.psnr_db;
    s.mean_perceptual_distance += r.perceptual_distance;
    s.mean_hits += static_cast<double>(r.hits.size());
    s.mean_n_s += static_cast<double>(r.n_s);
    s.mean_index_symbols += r.index_symbols;
  }
  const double n = static_cast<double>(records.size());
  s.mean_bcr /= n;
  s.mean_psnr_db /= n;
  s.mean_perceptual_distance /= n;
  s.mean_hits /= n;
  s.mean_n_s /= n;
  s.mean_index_symbols /= n;
  s.first_bcr = records.front().bcr;
  s.bcr_moving_average = moving_average(bcrs, window);
  return s;
}

GeneratorModel build_generator(const SimulationConfig& cfg) {
  if (!cfg.generator.weights.empty()) {
    GeneratorModel model = load_generator(cfg.generator.weights);
    if (model.latent_shape() != cfg.latent || model.image_shape() != cfg.image) {
      throw ConfigError({"generator.weights: model dimensions do not match "
                         "n_slots/slot_len/image"});
    }
    return model;
  }
  const std::uint64_t seed = cfg.generator.seed.value_or(
      derive_seed(cfg.master_seed, "generator"));
  if (cfg.generator.kind == GeneratorKind::linear) {
    return GeneratorModel::make_linear(cfg.latent, cfg.image, seed);
  }
  return GeneratorModel::make_mlp(cfg.latent, cfg.image, cfg.generator.hidden,
                                  seed);
}

SourceSequence build_source(const SimulationConfig& cfg,
                            const GeneratorModel& model) {
  if (cfg.source.kind == SourceSpec::Kind::synthetic) {
    return generate_source_sequence(cfg.source.synthetic, cfg.latent,
                                    cfg.num_images,
                                    derive_seed(cfg.master_seed, "source"),
                                    &model);
  }
  SourceSequence seq = load_dataset(cfg.source.dataset_path);
  if (seq.shape != cfg.latent) {
    throw ConfigError({"source.dataset_path: dataset latent shape does not "
                       "match n_slots/slot_len"});
  }
  if (seq.size() < cfg.num_images) {
    throw ConfigError({"num_images: dataset holds only " +
                       std::to_string(seq.size()) + " items"});
  }
  if (!seq.images.empty() && seq.images.front().shape() != cfg.image) {
    throw ConfigError({"source.dataset_path: dataset image shape does not "
                       "match image"});
  }
  if (seq.images.empty()) {
    for (const auto& z : seq.latents) seq.images.push_back(render_latent(model, z));
  }
  return seq;
}

RunResult run_sequence(const SimulationConfig& cfg, const GeneratorModel& model,
                       const SourceSequence& source, LinkState link) {
  if (source.size() < cfg.num_images || source.images.size() < cfg.num_images) {
    throw InvalidArgument("source shorter than num_images");
  }
  RunResult result;
  result.records.reserve(cfg.num_images);
  for (std::size_t n = 0; n < cfg.num_images; ++n) {
    auto tr = transmit_image(source.images[n], &source.latents[n], link, model,
                             cfg);
    result.records.push_back(std::move(tr.record));
  }
  result.summary = summarize(result.records, cfg.report_window);
  result.link = std::move(link);
  return result;
}

RunResult run_sequence(const SimulationConfig& cfg) {
  cfg.validate();
  const GeneratorModel model = build_generator(cfg);
  const SourceSequence source = build_source(cfg, model);
  LinkState link = LinkState::cold(cfg);
  if (!cfg.resume_from.empty()) {
    const std::filesystem::path dir(cfg.resume_from);
    link.tx_cache = load_cache(dir / "tx_cache.json");
    link.rx_cache = load_cache(dir / "rx_cache.json");
    if (link.tx_cache.n_slots() != cfg.latent.n_slots ||
        link.tx_cache.slot_len() != cfg.latent.slot_len ||
        link.tx_cache.capacity() != cfg.cache_capacity ||
        link.rx_cache.n_slots() != cfg.latent.n_slots ||
        link.rx_cache.slot_len() != cfg.latent.slot_len ||
        link.rx_cache.capacity() != cfg.cache_capacity) {
      throw ConfigError({"resume_from: cache dimensions do not match config"});
    }
  }
  return run_sequence(cfg, model, source, std::move(link));
}

nlohmann::json to_json(const RunSummary& s) {
  return {{"num_images", s.num_images},
          {"mean_bcr", s.mean_bcr},
          {"min_bcr", s.min_bcr},
          {"max_bcr", s.max_bcr},
          {"first_bcr", s.first_bcr},
          {"mean_psnr_db", s.mean_psnr_db},
          {"mean_perceptual_distance", s.mean_perceptual_distance},
          {"mean_hits", s.mean_hits},
          {"mean_n_s", s.mean_n_s},
          {"mean_index_symbols", s.mean_index_symbols},
          {"moving_average_window", s.window},
          {"bcr_moving_average", s.bcr_moving_average}};
}

nlohmann::json summary_document(const SimulationConfig& cfg,
                                const RunSummary& summary) {
  nlohmann::json doc = to_json(summary);
  doc["provenance"] = {{"config_hash", config_hash(cfg)},
                       {"master_seed", cfg.master_seed},
                       {"version", kVersion}};
  return doc;
}

}  // namespace semcom
