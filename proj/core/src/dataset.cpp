#include "alseg/dataset.hpp"

#include "alseg/rng.hpp"
#include "alseg/version.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace alseg {

namespace {

int rare_count(const GenConfig& c) { return static_cast<int>(c.rare_class_frequencies.size()); }

std::string index_name(const char* stem, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d.bin", stem, i);
  return buf;
}

template <typename T>
void write_blob(const std::filesystem::path& path, const std::vector<T>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

template <typename T>
void read_blob(const std::filesystem::path& path, std::vector<T>& data) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != data.size() * sizeof(T))
    throw std::runtime_error(path.string() + ": unexpected size " + std::to_string(bytes));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw std::runtime_error("short read from " + path.string());
}

// Recursive rectangle splits assigning one background class per leaf.
void paint_background(LabelMap& labels, int num_background, std::mt19937_64& rng) {
  struct Rect {
    int y, x, h, w;
  };
  std::vector<Rect> stack{{0, 0, labels.height, labels.width}};
  std::uniform_int_distribution<int> cls(0, num_background - 1);
  while (!stack.empty()) {
    Rect r = stack.back();
    stack.pop_back();
    if (r.h * r.w <= 256 || (r.h < 12 && r.w < 12)) {
      auto c = static_cast<std::uint8_t>(cls(rng));
      for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) labels.at(y, x) = c;
      continue;
    }
    if (r.h >= r.w) {
      std::uniform_int_distribution<int> cut(r.h / 4, r.h - r.h / 4 - 1);
      int at = std::max(1, cut(rng));
      stack.push_back({r.y, r.x, at, r.w});
      stack.push_back({r.y + at, r.x, r.h - at, r.w});
    } else {
      std::uniform_int_distribution<int> cut(r.w / 4, r.w - r.w / 4 - 1);
      int at = std::max(1, cut(rng));
      stack.push_back({r.y, r.x, r.h, at});
      stack.push_back({r.y, r.x + at, r.h, r.w - at});
    }
  }
}

}  // namespace

void GenConfig::validate() const {
  if (num_images <= 0) throw std::invalid_argument("gen: num_images must be positive");
  if (height <= 0 || width <= 0 || channels <= 0)
    throw std::invalid_argument("gen: image dimensions must be positive");
  if (num_classes < 2) throw std::invalid_argument("gen: need at least 2 classes");
  if (num_classes > 254) throw std::invalid_argument("gen: class ids must stay below the void label");
  int rare = rare_count(*this);
  if (rare >= num_classes)
    throw std::invalid_argument("gen: at least one background class required");
  double rare_sum = 0.0;
  for (double f : rare_class_frequencies) {
    if (f <= 0.0 || f >= 1.0) throw std::invalid_argument("gen: rare frequencies must be in (0,1)");
    rare_sum += f;
  }
  if (rare_sum >= 0.5) throw std::invalid_argument("gen: rare classes must stay a minority");
  if (object_size_range[0] < 1 || object_size_range[0] > object_size_range[1])
    throw std::invalid_argument("gen: bad object size range");
  if (object_size_range[1] > std::min(height, width))
    throw std::invalid_argument("gen: objects larger than the image");
  if (noise_sigma < 0.0) throw std::invalid_argument("gen: noise_sigma must be nonnegative");
  if (signature_overlap < 0.0 || signature_overlap > 1.0)
    throw std::invalid_argument("gen: signature_overlap must be in [0,1]");
  if (signature_jitter < 0.0 || signature_jitter > 1.0)
    throw std::invalid_argument("gen: signature_jitter must be in [0,1]");
  if (region_height <= 0 || region_width <= 0)
    throw std::invalid_argument("gen: region dimensions must be positive");
  if (height % region_height != 0 || width % region_width != 0)
    throw std::invalid_argument("gen: region dimensions must divide the image dimensions");
}

SceneDataset::SceneDataset(std::vector<Image> imgs, std::vector<LabelMap> labs, int classes,
                           int rh, int rw)
    : images(std::move(imgs)), labels(std::move(labs)), num_classes(classes),
      region_height(rh), region_width(rw) {
  if (images.empty()) throw std::invalid_argument("dataset: no images");
  if (images.size() != labels.size())
    throw std::invalid_argument("dataset: image/label count mismatch");
  if (num_classes < 1 || num_classes > 254) throw std::invalid_argument("dataset: bad class count");
  if (rh <= 0 || rw <= 0) throw std::invalid_argument("dataset: bad region dimensions");
  const Image& first = images.front();
  if (first.height % rh != 0 || first.width % rw != 0)
    throw std::invalid_argument("dataset: region dimensions must divide the image dimensions");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& im = images[i];
    if (im.height != first.height || im.width != first.width || im.channels != first.channels)
      throw std::invalid_argument("dataset: images must share dimensions");
    if (labels[i].height != im.height || labels[i].width != im.width)
      throw std::invalid_argument("dataset: label map dimensions mismatch");
    for (std::uint8_t v : labels[i].data)
      if (v >= num_classes && v != kVoidLabel)
        throw std::invalid_argument("dataset: label id exceeds num_classes");
  }
}

std::vector<std::vector<float>> class_signatures(const GenConfig& config) {
  config.validate();
  auto rng = make_rng(config.signature_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> raw(config.num_classes,
                                       std::vector<double>(config.channels));
  for (auto& row : raw)
    for (auto& v : row) v = unif(rng);
  if (config.signature_jitter > 0.0) {
    auto jrng = make_rng(derive_seed(config.signature_seed, "jitter"));
    for (auto& row : raw)
      for (auto& v : row)
        v = (1.0 - config.signature_jitter) * v + config.signature_jitter * unif(jrng);
  }
  std::vector<double> mean(config.channels, 0.0);
  for (const auto& row : raw)
    for (int c = 0; c < config.channels; ++c) mean[c] += row[c] / config.num_classes;
  std::vector<std::vector<float>> sig(config.num_classes, std::vector<float>(config.channels));
  for (int k = 0; k < config.num_classes; ++k)
    for (int c = 0; c < config.channels; ++c)
      sig[k][c] = static_cast<float>((1.0 - config.signature_overlap) * raw[k][c] +
                                     config.signature_overlap * mean[c]);
  return sig;
}

SceneDataset generate_scenes(const GenConfig& config) {
  config.validate();
  auto signatures = class_signatures(config);
  auto layout_rng = make_rng(derive_seed(config.seed, "layout"));
  auto noise_rng = make_rng(derive_seed(config.seed, "noise"));
  std::normal_distribution<double> noise(0.0, config.noise_sigma);

  const int rare = rare_count(config);
  const int background = config.num_classes - rare;
  const double image_pixels = static_cast<double>(config.height) * config.width;
  std::vector<double> deficit(rare, 0.0);

  std::vector<Image> images;
  std::vector<LabelMap> labels;
  images.reserve(config.num_images);
  labels.reserve(config.num_images);

  for (int i = 0; i < config.num_images; ++i) {
    LabelMap lab(config.height, config.width);
    paint_background(lab, background, layout_rng);

    // Rare classes appear as compact rectangles over background pixels only;
    // a per-class pixel deficit carries the unpainted remainder to the next
    // image so dataset-wide frequencies stay near their targets.
    std::uniform_int_distribution<int> size_dist(config.object_size_range[0],
                                                 config.object_size_range[1]);
    for (int r = 0; r < rare; ++r) {
      auto cls = static_cast<std::uint8_t>(background + r);
      deficit[r] += config.rare_class_frequencies[r] * image_pixels;
      for (int attempts = 0; attempts < 32; ++attempts) {
        int oh = size_dist(layout_rng);
        int ow = size_dist(layout_rng);
        if (deficit[r] < 0.5 * oh * ow) break;
        std::uniform_int_distribution<int> ypos(0, config.height - oh);
        std::uniform_int_distribution<int> xpos(0, config.width - ow);
        int oy = ypos(layout_rng);
        int ox = xpos(layout_rng);
        int painted = 0;
        for (int y = oy; y < oy + oh; ++y)
          for (int x = ox; x < ox + ow; ++x)
            if (lab.at(y, x) < background) {
              lab.at(y, x) = cls;
              ++painted;
            }
        deficit[r] -= painted;
      }
    }

    Image img(config.height, config.width, config.channels);
    for (int y = 0; y < config.height; ++y)
      for (int x = 0; x < config.width; ++x) {
        const auto& sig = signatures[lab.at(y, x)];
        for (int c = 0; c < config.channels; ++c)
          img.at(y, x, c) = sig[c] + static_cast<float>(noise(noise_rng));
      }
    images.push_back(std::move(img));
    labels.push_back(std::move(lab));
  }
  return SceneDataset(std::move(images), std::move(labels), config.num_classes,
                      config.region_height, config.region_width);
}

std::vector<double> class_histogram(const SceneDataset& dataset,
                                    const std::vector<int>& image_indices) {
  std::vector<std::uint64_t> counts(dataset.num_classes, 0);
  auto add_image = [&](int i) {
    if (i < 0 || i >= dataset.num_images())
      throw std::invalid_argument("class_histogram: image index out of range");
    for (std::uint8_t v : dataset.labels[i].data)
      if (v != kVoidLabel) ++counts[v];
  };
  if (image_indices.empty())
    for (int i = 0; i < dataset.num_images(); ++i) add_image(i);
  else
    for (int i : image_indices) add_image(i);
  std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  std::vector<double> hist(dataset.num_classes, 0.0);
  if (total > 0)
    for (int c = 0; c < dataset.num_classes; ++c)
      hist[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
  return hist;
}

std::vector<int> select_state_set(const SceneDataset& dataset, const std::vector<int>& candidates,
                                  const std::vector<double>& target_hist, int count) {
  if (count < 0) throw std::invalid_argument("select_state_set: count must be nonnegative");
  if (count == 0) return {};
  if (static_cast<int>(candidates.size()) < count)
    throw std::invalid_argument("select_state_set: not enough candidates");
  if (static_cast<int>(target_hist.size()) != dataset.num_classes)
    throw std::invalid_argument("select_state_set: target histogram length mismatch");

  std::vector<std::vector<std::uint64_t>> counts;
  counts.reserve(candidates.size());
  for (int i : candidates) {
    std::vector<std::uint64_t> c(dataset.num_classes, 0);
    for (std::uint8_t v : dataset.labels[i].data)
      if (v != kVoidLabel) ++c[v];
    counts.push_back(std::move(c));
  }

  std::vector<int> picked;
  std::vector<bool> used(candidates.size(), false);
  std::vector<std::uint64_t> running(dataset.num_classes, 0);
  for (int step = 0; step < count; ++step) {
    int best = -1;
    double best_dist = 0.0;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (used[j]) continue;
      std::uint64_t total = 0;
      for (int c = 0; c < dataset.num_classes; ++c) total += running[c] + counts[j][c];
      double dist = 0.0;
      for (int c = 0; c < dataset.num_classes; ++c) {
        double p = total ? static_cast<double>(running[c] + counts[j][c]) / total : 0.0;
        dist += std::abs(p - target_hist[c]);
      }
      if (best < 0 || dist < best_dist) {
        best = static_cast<int>(j);
        best_dist = dist;
      }
    }
    used[best] = true;
    picked.push_back(candidates[best]);
    for (int c = 0; c < dataset.num_classes; ++c) running[c] += counts[best][c];
  }
  return picked;
}

Splits split_dataset(const SceneDataset& dataset, const SplitSizes& sizes, std::uint64_t seed) {
  if (sizes.train_pool < 0 || sizes.eval_pool < 0 || sizes.reward < 0 || sizes.state < 0)
    throw std::invalid_argument("split: sizes must be nonnegative");
  int total = sizes.train_pool + sizes.eval_pool + sizes.reward + sizes.state;
  if (total > dataset.num_images())
    throw std::invalid_argument("split: sizes exceed the dataset");

  std::vector<int> all(dataset.num_images());
  std::iota(all.begin(), all.end(), 0);
  Splits s;
  s.state = select_state_set(dataset, all, class_histogram(dataset), sizes.state);

  std::vector<bool> taken(dataset.num_images(), false);
  for (int i : s.state) taken[i] = true;
  std::vector<int> rest;
  for (int i = 0; i < dataset.num_images(); ++i)
    if (!taken[i]) rest.push_back(i);
  auto rng = make_rng(derive_seed(seed, "splits"));
  std::shuffle(rest.begin(), rest.end(), rng);

  auto take = [&rest](int n) {
    std::vector<int> out(rest.end() - n, rest.end());
    rest.resize(rest.size() - n);
    std::sort(out.begin(), out.end());
    return out;
  };
  s.train_pool = take(sizes.train_pool);
  s.eval_pool = take(sizes.eval_pool);
  s.reward = take(sizes.reward);
  std::sort(s.state.begin(), s.state.end());
  return s;
}

std::vector<int> holdout_indices(const SceneDataset& dataset, const Splits& splits) {
  std::vector<bool> taken(dataset.num_images(), false);
  for (const auto* role : {&splits.train_pool, &splits.eval_pool, &splits.reward, &splits.state})
    for (int i : *role) {
      if (i < 0 || i >= dataset.num_images())
        throw std::invalid_argument("holdout: split index out of range");
      taken[i] = true;
    }
  std::vector<int> out;
  for (int i = 0; i < dataset.num_images(); ++i)
    if (!taken[i]) out.push_back(i);
  return out;
}

std::vector<RegionId> region_grid(const SceneDataset& dataset) {
  std::vector<RegionId> out;
  out.reserve(dataset.total_regions());
  for (int i = 0; i < dataset.num_images(); ++i)
    for (int r = 0; r < dataset.grid_rows(); ++r)
      for (int c = 0; c < dataset.grid_cols(); ++c) out.push_back({i, r, c});
  return out;
}

std::vector<RegionId> image_regions(const SceneDataset& dataset, int image_index) {
  if (image_index < 0 || image_index >= dataset.num_images())
    throw std::invalid_argument("image_regions: index out of range");
  std::vector<RegionId> out;
  out.reserve(dataset.regions_per_image());
  for (int r = 0; r < dataset.grid_rows(); ++r)
    for (int c = 0; c < dataset.grid_cols(); ++c) out.push_back({image_index, r, c});
  return out;
}

std::pair<PatchView, LabelPatchView> region_pixels(const SceneDataset& dataset, RegionId region) {
  if (region.image_index < 0 || region.image_index >= dataset.num_images() || region.row < 0 ||
      region.row >= dataset.grid_rows() || region.col < 0 || region.col >= dataset.grid_cols())
    throw std::invalid_argument("region_pixels: region out of range");
  int y0 = region.row * dataset.region_height;
  int x0 = region.col * dataset.region_width;
  return {PatchView{&dataset.images[region.image_index], y0, x0, dataset.region_height,
                    dataset.region_width},
          LabelPatchView{&dataset.labels[region.image_index], y0, x0, dataset.region_height,
                         dataset.region_width}};
}

LabelPatchView reveal_labels(const SceneDataset& dataset, RegionId region) {
  return region_pixels(dataset, region).second;
}

void save_dataset(const SceneDataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta{
      {"version", std::string(kVersion)},
      {"num_images", dataset.num_images()},
      {"height", dataset.images.front().height},
      {"width", dataset.images.front().width},
      {"channels", dataset.images.front().channels},
      {"num_classes", dataset.num_classes},
      {"region_height", dataset.region_height},
      {"region_width", dataset.region_width},
  };
  std::ofstream meta_out(dir / "manifest.json");
  if (!meta_out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  meta_out << meta.dump(2) << '\n';
  for (int i = 0; i < dataset.num_images(); ++i) {
    write_blob(dir / index_name("image", i), dataset.images[i].data);
    write_blob(dir / index_name("labels", i), dataset.labels[i].data);
  }
}

SceneDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "manifest.json");
  if (!meta_in) throw std::runtime_error("cannot read " + (dir / "manifest.json").string());
  nlohmann::json meta = nlohmann::json::parse(meta_in);
  if (meta.at("version").get<std::string>() != kVersion)
    throw std::runtime_error("dataset version mismatch in " + dir.string());
  int n = meta.at("num_images").get<int>();
  int h = meta.at("height").get<int>();
  int w = meta.at("width").get<int>();
  int ch = meta.at("channels").get<int>();
  std::vector<Image> images;
  std::vector<LabelMap> labels;
  images.reserve(n);
  labels.reserve(n);
  for (int i = 0; i < n; ++i) {
    Image img(h, w, ch);
    read_blob(dir / index_name("image", i), img.data);
    images.push_back(std::move(img));
    LabelMap lab(h, w);
    read_blob(dir / index_name("labels", i), lab.data);
    labels.push_back(std::move(lab));
  }
  return SceneDataset(std::move(images), std::move(labels), meta.at("num_classes").get<int>(),
                      meta.at("region_height").get<int>(), meta.at("region_width").get<int>());
}

SceneDataset with_region_dims(const SceneDataset& dataset, int region_height, int region_width) {
  return SceneDataset(dataset.images, dataset.labels, dataset.num_classes, region_height,
                      region_width);
}

}  // namespace alseg
