#include "coopalign/harness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "coopalign/common/error.hpp"
#include "coopalign/common/log.hpp"
#include "coopalign/fusion/fsa_oracle.hpp"
#include "coopalign/fusion/rasterize.hpp"
#include "coopalign/pgc/downsample.hpp"

namespace coopalign::harness {

namespace {

// Substream tags keeping independent draws apart.
constexpr std::uint64_t kTagOracle = 11;
constexpr std::uint64_t kTagRansac = 12;
constexpr std::uint64_t kTagGnss = 13;

}  // namespace

std::optional<pgc::PoseEstimate> pgc_estimate(const PointCloud& cloud, const Pose& gt_pose, const PipelineConfig& cfg,
                                              std::uint64_t seed, int agent, int frame) {
  const auto a = static_cast<std::uint64_t>(agent);
  const auto f = static_cast<std::uint64_t>(frame);
  const PointCloud thin = pgc::rsd_downsample(cloud, cfg.downsample_voxel);
  if (thin.size() < static_cast<std::size_t>(cfg.ransac.sample_size)) return std::nullopt;
  Rng rng = Rng::substream(seed, {kTagOracle, a, f});
  const auto pred = pgc::oracle_predict(thin, gt_pose, cfg.oracle, rng);
  pgc::RansacConfig rc = cfg.ransac;
  rc.seed = derive_seed(seed, {kTagRansac, a, f});
  return pgc::ransac_pose(pred, rc);
}

PipelineModels default_models(const PipelineConfig& cfg, int frames) {
  PipelineModels m;
  m.vit = temporal::ViTParams::zeros(cfg.vit, kFusedChannels);
  for (int c = 0; c < kFusedChannels; ++c) {
    m.vit.embedding.weight[static_cast<std::size_t>(c) * kFusedChannels + static_cast<std::size_t>(c)] = 1.0;
  }
  const auto code = temporal::temporal_encoding(frames, cfg.vit.dim, cfg.vit.tokenize.variant);
  m.head = detection::HeadParams::zeros(cfg.vit.dim);
  const auto d = static_cast<std::size_t>(cfg.vit.dim);
  const std::size_t height_channel = fusion::kMaxHeight;
  constexpr double kGain = 0.4;
  constexpr double kOffset = -0.3;
  m.head.weight[0 * d + height_channel] = kGain;
  m.head.bias[0] = kOffset - kGain * code[height_channel];
  m.head.bias[3] = 0.8;
  m.head.bias[4] = std::log(1.6);
  m.head.bias[5] = std::log(1.9);
  m.head.bias[6] = std::log(4.4);
  return m;
}

fusion::BevGrid fuse_grids(std::span<const fusion::BevGrid> embedded) {
  if (embedded.empty()) throw InvalidArgument("fuse_grids: no grids");
  const auto& spec = embedded.front().spec;
  constexpr int kRaster = fusion::kRasterChannels;
  for (const auto& g : embedded) {
    if (!(g.spec == spec) || g.channels != kRaster + 1) {
      throw ShapeMismatch("fuse_grids: expected raster grids with one confidence channel on a shared spec");
    }
  }
  fusion::BevGrid out(spec, kFusedChannels);
  const std::size_t cells = spec.cells();
  for (int c = 0; c < kRaster; ++c) {
    auto mx = out.plane(c);
    auto sum = out.plane(kRaster + c);
    std::copy(embedded.front().plane(c).begin(), embedded.front().plane(c).end(), mx.begin());
    for (std::size_t g = 0; g < embedded.size(); ++g) {
      const auto src = embedded[g].plane(c);
      const auto w = embedded[g].plane(kRaster);
      for (std::size_t i = 0; i < cells; ++i) {
        mx[i] = std::max(mx[i], src[i]);
        sum[i] += w[i] * src[i];
      }
    }
  }
  return out;
}

PipelineResult run_pipeline(const Scenario& scenario, const PipelineConfig& cfg, const PipelineOptions& opts) {
  cfg.validate();
  if (scenario.agents.empty()) throw InvalidArgument("run_pipeline: scenario has no agents");
  const auto& ego = scenario.agents.front();
  const int frames = static_cast<int>(ego.frames.size());
  for (const auto& a : scenario.agents) {
    if (static_cast<int>(a.frames.size()) != frames || frames < 1) {
      throw InvalidArgument("run_pipeline: every agent needs the same, non-zero number of frames");
    }
  }
  const int agents = opts.fuse_neighbors ? static_cast<int>(scenario.agents.size()) : 1;
  auto log = logger();

  PipelineResult res;
  res.estimates.assign(static_cast<std::size_t>(agents), std::nullopt);
  std::vector<fusion::BevGrid> fused_frames;

  for (int t = 0; t < frames; ++t) {
    // Per-agent pose and confidence.
    std::vector<std::optional<pgc::PoseEstimate>> est(static_cast<std::size_t>(agents));
    for (int a = 0; a < agents; ++a) {
      const auto& view = scenario.agents[static_cast<std::size_t>(a)];
      auto& e = est[static_cast<std::size_t>(a)];
      switch (opts.pose_source) {
        case PoseSource::kPgc:
          e = pgc_estimate(view.frames[static_cast<std::size_t>(t)], view.gt_pose, cfg, opts.seed, a, t);
          break;
        case PoseSource::kGnss: {
          Rng rng = Rng::substream(opts.seed, {kTagGnss, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(t)});
          e = pgc::PoseEstimate{};
          e->pose = perturb_pose(view.gt_pose, opts.gnss_noise, rng);
          e->confidence = 1.0;
          e->inlier_ratio = 1.0;
          break;
        }
        case PoseSource::kGroundTruth:
          e = pgc::PoseEstimate{};
          e->pose = view.gt_pose;
          e->confidence = 1.0;
          e->inlier_ratio = 1.0;
          break;
      }
    }
    res.estimates = est;

    // Agent-frame rasters.
    std::vector<fusion::BevGrid> raster;
    for (int a = 0; a < agents; ++a) {
      raster.push_back(fusion::rasterize_bev(scenario.agents[static_cast<std::size_t>(a)].frames[static_cast<std::size_t>(t)],
                                             cfg.grid));
    }

    const bool ego_ok = est.front().has_value();
    res.ego_localized.push_back(ego_ok);
    if (!ego_ok) log->warn("frame {}: ego pose estimation failed; falling back to ego-only features", t);

    std::vector<std::pair<fusion::BevGrid, Pose>> incoming;
    std::vector<double> sigmas{ego_ok ? est.front()->confidence : 1.0};
    std::vector<std::size_t> trace_index;
    for (int a = 1; a < agents; ++a) {
      NeighborTrace tr;
      tr.agent = a;
      tr.frame = t;
      const auto& e = est[static_cast<std::size_t>(a)];
      if (!e) {
        log->warn("frame {}: agent {} pose estimation failed; excluded from fusion", t, a);
      } else {
        res.ledger.record(a, 0, MessageKind::kPose, pgc::encode_pose_message(*e), t);
        res.ledger.record(a, 0, MessageKind::kFeatures, fusion::encode_bev_grid(raster[static_cast<std::size_t>(a)]), t);
        tr.confidence = e->confidence;
        tr.included = ego_ok;
        if (ego_ok) {
          incoming.emplace_back(raster[static_cast<std::size_t>(a)], e->pose);
          sigmas.push_back(e->confidence);
          trace_index.push_back(res.neighbors.size());
        }
      }
      res.neighbors.push_back(tr);
    }

    // Coarse alignment into the ego frame.
    std::vector<fusion::BevGrid> aligned{raster.front()};
    if (!incoming.empty()) {
      auto warped = fusion::coarse_align(est.front()->pose, incoming);
      // FSA: residual 3-DoF correction per neighbor.
      if (opts.feature_alignment) {
        std::vector<fusion::OffsetDelta> corrections;
        for (std::size_t k = 0; k < warped.size(); ++k) {
          auto& tr = res.neighbors[trace_index[k]];
          try {
            const auto d = fusion::fsa_oracle_estimate(raster.front(), warped[k], cfg.fsa);
            tr.fsa_offset = d;
            tr.fsa_applied = true;
            corrections.push_back(d.inverse());
          } catch (const NoSignal&) {
            log->info("frame {}: agent {} FSA found no signal; keeping coarse alignment", t, tr.agent);
            corrections.emplace_back();
          }
        }
        warped = fusion::apply_offset(warped, corrections);
      }
      for (auto& w : warped) aligned.push_back(std::move(w));
    }

    // Confidence embedding and fusion.
    if (!opts.confidence_embedding) std::fill(sigmas.begin(), sigmas.end(), 1.0);
    const auto embedded = fusion::confidence_embed(aligned, sigmas);
    fused_frames.push_back(fuse_grids(embedded));
  }

  // Temporal encoding and detection head.
  const PipelineModels models = default_models(cfg, frames);
  res.encoded = temporal::encode(models.vit, fused_frames);
  res.detections = detection::decode_head(res.encoded, models.head, cfg.decode);
  return res;
}

}  // namespace coopalign::harness
