#include "caer/train/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "caer/error.hpp"
#include "caer/util/rng.hpp"
#include "caer/util/time.hpp"

namespace caer::train {

namespace {

const std::array<cv::Scalar, 4> kCueColours{
    cv::Scalar(40, 40, 220),   // red
    cv::Scalar(40, 200, 40),   // green
    cv::Scalar(220, 60, 40),   // blue
    cv::Scalar(30, 210, 230),  // yellow
};

// Texture value in {0, 0.5, 1} at face-local pixel (u, v); every pattern
// averages 0.5 over whole periods.
double texture(int pattern, int u, int v) {
  switch (pattern) {
    case 0: return (v / 2) % 2;
    case 1: return (u / 2) % 2;
    case 2: return (u / 2 + v / 2) % 2;
    default: return 0.5;
  }
}

cv::Scalar jitter_colour(cv::Scalar base, double spread, Rng& rng) {
  std::uniform_real_distribution<double> d(-spread, spread);
  for (int c = 0; c < 3; ++c) base[c] = std::clamp(base[c] + d(rng), 0.0, 255.0);
  return base;
}

}  // namespace

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"subjects", s.subjects},   {"width", s.width},       {"height", s.height},
       {"face_size", s.face_size}, {"min_frames", s.min_frames}, {"max_frames", s.max_frames},
       {"fps", s.fps},             {"noise", s.noise},       {"label_noise", s.label_noise},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  const SyntheticSpec d;
  s.subjects = j.value("subjects", d.subjects);
  s.width = j.value("width", d.width);
  s.height = j.value("height", d.height);
  s.face_size = j.value("face_size", d.face_size);
  s.min_frames = j.value("min_frames", d.min_frames);
  s.max_frames = j.value("max_frames", d.max_frames);
  s.fps = j.value("fps", d.fps);
  s.noise = j.value("noise", d.noise);
  s.label_noise = j.value("label_noise", d.label_noise);
  s.seed = j.value("seed", d.seed);
}

SyntheticCorpus::SyntheticCorpus(SyntheticSpec spec) : spec_(spec) {
  if (spec_.subjects < 1 || spec_.min_frames < 1 || spec_.max_frames < spec_.min_frames || spec_.face_size < 8 ||
      spec_.width < 4 * spec_.face_size || spec_.height < 4 * spec_.face_size || !(spec_.fps > 0.0)) {
    throw Error(ErrorCode::config, "synthetic corpus: invalid spec");
  }
  const int classes = static_cast<int>(kSyntheticFacePattern.size());
  const int w = spec_.width, h = spec_.height, s = spec_.face_size;
  const int desk_top = h * 7 / 10;
  Rng order_rng(derive_seed(spec_.seed, {0}));
  int next_id = 0;
  std::vector<int> ids(static_cast<std::size_t>(spec_.subjects * classes));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), order_rng);

  for (int subj = 0; subj < spec_.subjects; ++subj) {
    Rng srng(derive_seed(spec_.seed, {1, static_cast<std::uint64_t>(subj)}));
    const cv::Scalar background = jitter_colour({110, 110, 110}, 30, srng);
    const cv::Scalar skin = jitter_colour({120, 150, 185}, 15, srng);
    const cv::Scalar desk = jitter_colour({60, 90, 120}, 15, srng);
    const cv::Scalar body = jitter_colour({90, 90, 90}, 25, srng);
    for (int k = 0; k < classes; ++k) {
      Rng crng(derive_seed(spec_.seed, {2, static_cast<std::uint64_t>(subj), static_cast<std::uint64_t>(k)}));
      SyntheticClip c;
      c.label = k;
      c.background = background;
      c.skin = skin;
      c.desk = desk;
      c.body = body;
      c.face_x = std::uniform_int_distribution<int>(w / 5, w - w / 5 - s)(crng);
      c.face_y = std::uniform_int_distribution<int>(h / 6, desk_top - 2 * s)(crng);
      const int ow = w / 5, oh = h / 6;
      const bool right = c.face_x + s / 2 < w / 2;
      c.object_x = right ? std::uniform_int_distribution<int>(w / 2 + 8, w - ow - 4)(crng)
                         : std::uniform_int_distribution<int>(4, w / 2 - ow - 8)(crng);
      c.object_y = std::uniform_int_distribution<int>(desk_top + 2, h - oh - 2)(crng);
      c.phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(crng);

      auto& r = c.record;
      r.clip_id = fmt::format("clip_{:03d}", ids[next_id++]);
      r.subject_id = fmt::format("s{:02d}", subj);
      r.scenario = dataset::Scenario::classroom;
      r.media_path = fmt::format("media/{}.avi", r.clip_id);
      r.fps = spec_.fps;
      r.n_frames = std::uniform_int_distribution<int>(spec_.min_frames, spec_.max_frames)(crng);
      r.duration_s = r.n_frames / r.fps;
      clips_.push_back(std::move(c));
    }
  }
  std::sort(clips_.begin(), clips_.end(),
            [](const auto& a, const auto& b) { return a.record.clip_id < b.record.clip_id; });
  for (std::size_t i = 0; i < clips_.size(); ++i) {
    auto& r = clips_[i].record;
    for (int f = 0; f < r.n_frames; ++f) {
      const auto box = face_rect(i, f);
      r.face_boxes.push_back({f, box.x, box.y, box.width, box.height});
    }
  }
}

const labels::LabelSet& SyntheticCorpus::labels() const { return labels::fine_labels(); }

std::vector<dataset::ClipRecord> SyntheticCorpus::manifest() const {
  std::vector<dataset::ClipRecord> out;
  out.reserve(clips_.size());
  for (const auto& c : clips_) out.push_back(c.record);
  return out;
}

cv::Rect SyntheticCorpus::face_rect(std::size_t clip, int frame) const {
  const auto& c = clips_.at(clip);
  const double t = 2.0 * std::numbers::pi * frame / 12.0 + c.phase;
  const int dx = static_cast<int>(std::lround(2.0 * std::sin(t)));
  const int dy = static_cast<int>(std::lround(1.5 * std::cos(t)));
  return {c.face_x + dx, c.face_y + dy, spec_.face_size, spec_.face_size};
}

cv::Mat SyntheticCorpus::render(std::size_t clip, int frame) const {
  const auto& c = clips_.at(clip);
  if (frame < 0 || frame >= c.record.n_frames) {
    throw Error(ErrorCode::degenerate_input, fmt::format("{}: no frame {}", c.record.clip_id, frame));
  }
  const int w = spec_.width, h = spec_.height;
  const int desk_top = h * 7 / 10;
  cv::Mat img(h, w, CV_8UC3, c.background);
  for (int y = 0; y < desk_top; ++y) {
    const double shade = 1.0 - 0.25 * y / desk_top;
    img.row(y).setTo(c.background * shade);
  }
  cv::rectangle(img, cv::Rect(0, desk_top, w, h - desk_top), c.desk, cv::FILLED);

  const cv::Rect face = face_rect(clip, frame);
  const int s = spec_.face_size;
  cv::rectangle(img, cv::Rect(face.x - s / 3, face.y + s, s + 2 * (s / 3), desk_top - face.y - s), c.body, cv::FILLED);

  const double t = 2.0 * std::numbers::pi * frame / 16.0 + c.phase;
  const int ox = c.object_x + static_cast<int>(std::lround(std::sin(t)));
  cv::rectangle(img, cv::Rect(ox, c.object_y, w / 5, h / 6), kCueColours[kSyntheticContextCue[c.label]], cv::FILLED);

  const int pattern = kSyntheticFacePattern[c.label];
  for (int v = 0; v < s; ++v) {
    auto* row = img.ptr<cv::Vec3b>(face.y + v);
    for (int u = 0; u < s; ++u) {
      const double a = 120.0 * (texture(pattern, u, v) - 0.5);
      for (int ch = 0; ch < 3; ++ch) row[face.x + u][ch] = cv::saturate_cast<uchar>(c.skin[ch] + a);
    }
  }

  if (spec_.noise > 0.0) {
    cv::RNG rng(derive_seed(spec_.seed, {3, clip, static_cast<std::uint64_t>(frame)}));
    cv::Mat noise(img.size(), CV_16SC3);
    rng.fill(noise, cv::RNG::NORMAL, 0.0, spec_.noise);
    cv::Mat wide;
    img.convertTo(wide, CV_16SC3);
    wide += noise;
    wide.convertTo(img, CV_8UC3);
  }
  return img;
}

std::vector<labels::AnnotationRecord> SyntheticCorpus::annotations() const {
  using labels::Granularity;
  const auto& fine = labels::fine_labels().categories();
  const Timestamp base = parse_timestamp("2024-03-01T09:00:00Z");
  std::vector<labels::AnnotationRecord> out;
  for (std::size_t i = 0; i < clips_.size(); ++i) {
    const auto& c = clips_[i];
    Rng rng(derive_seed(spec_.seed, {4, i}));
    std::bernoulli_distribution flip(spec_.label_noise);
    const int odd_rater = flip(rng) ? std::uniform_int_distribution<int>(0, 4)(rng) : -1;
    const int other = (c.label + 1 + std::uniform_int_distribution<int>(0, 3)(rng)) % 5;
    const std::string& truth = fine[c.label];
    for (int r = 0; r < 5; ++r) {
      const auto ts = base + std::chrono::minutes(static_cast<int>(10 * i + r));
      out.push_back({c.record.clip_id, fmt::format("f{}", r + 1), Granularity::fine,
                     r == odd_rater ? fine[other] : truth, ts});
      out.push_back({c.record.clip_id, fmt::format("c{}", r + 1), Granularity::coarse,
                     labels::map_fine_to_coarse(truth), ts});
    }
  }
  return out;
}

void SyntheticCorpus::write(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "media");
  {
    std::ofstream out(dir / "manifest.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", (dir / "manifest.jsonl").string()));
    const auto m = manifest();
    dataset::write_manifest(out, m);
  }
  {
    std::ofstream out(dir / "annotations.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", (dir / "annotations.jsonl").string()));
    const auto a = annotations();
    labels::write_annotation_table(out, a);
  }
  for (std::size_t i = 0; i < clips_.size(); ++i) {
    const auto& r = clips_[i].record;
    const fs::path path = dir / r.media_path;
    cv::VideoWriter writer(path.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), r.fps,
                           cv::Size(spec_.width, spec_.height));
    if (!writer.isOpened()) throw Error(ErrorCode::io, fmt::format("cannot write {}", path.string()));
    writer.set(cv::VIDEOWRITER_PROP_QUALITY, 100);
    for (int f = 0; f < r.n_frames; ++f) writer.write(render(i, f));
  }
}

SyntheticFrameSource::SyntheticFrameSource(std::shared_ptr<const SyntheticCorpus> corpus, std::size_t clip)
    : corpus_(std::move(corpus)), clip_(clip) {}

int SyntheticFrameSource::frame_count() const { return corpus_->clips().at(clip_).record.n_frames; }

std::vector<cv::Mat> SyntheticFrameSource::read(std::span<const int> indices) {
  std::vector<cv::Mat> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(corpus_->render(clip_, i));
  return out;
}

}  // namespace caer::train
