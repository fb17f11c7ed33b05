#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "netforge/dataset.hpp"
#include "netforge/error.hpp"

namespace fs = std::filesystem;

namespace netforge {

namespace {

bool looks_like_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  return in.gcount() == 2 && magic[0] == 'P' && magic[1] == '6';
}

std::string sample_name(std::size_t cls, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "c%02zu_%05zu.ppm", cls, index);
  return buf;
}

std::string class_name(std::size_t cls) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "class_%02zu", cls);
  return buf;
}

}  // namespace

DatasetIndex ingest_folder(const fs::path& root) {
  if (!fs::is_directory(root)) throw InputError("dataset root '" + root.string() + "' is not a directory");
  DatasetIndex index;
  index.root = root;
  index.split = root.filename().string();
  if (index.split.empty()) index.split = root.parent_path().filename().string();

  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) index.classes.push_back(entry.path().filename().string());
  }
  std::sort(index.classes.begin(), index.classes.end());
  if (index.classes.empty()) throw InputError("dataset root '" + root.string() + "' has no class directories");

  std::array<double, 3> sums{0.0, 0.0, 0.0};
  std::size_t pixels = 0;
  for (std::size_t cls = 0; cls < index.classes.size(); ++cls) {
    const fs::path dir = root / index.classes[cls];
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::size_t kept = 0;
    for (const auto& file : files) {
      if (!looks_like_ppm(file)) {
        index.warnings.push_back("skipping non-PPM file '" + file.string() + "'");
        continue;
      }
      const Image8 image = read_ppm(file);
      for (std::size_t i = 0; i < image.rgb.size(); ++i) sums[i % 3] += image.rgb[i];
      pixels += image.width * image.height;
      index.samples.emplace_back(fs::relative(file, root).generic_string(), static_cast<int>(cls));
      ++kept;
    }
    if (kept == 0) throw InputError("class directory '" + dir.string() + "' holds no PPM images");
  }
  for (std::size_t c = 0; c < 3; ++c) index.means[c] = sums[c] / static_cast<double>(pixels);
  return index;
}

LabeledImages load_images(const DatasetIndex& index, std::size_t extent) {
  LabeledImages out;
  out.images.reserve(index.samples.size());
  for (const auto& [rel, cls] : index.samples) {
    const fs::path path = index.root / rel;
    if (!fs::exists(path)) throw InputError("indexed file '" + path.string() + "' is missing");
    out.images.push_back(to_tensor(read_ppm(path), extent));
    out.labels.push_back(cls);
  }
  return out;
}

LoadedDataset load_dataset(const fs::path& root, std::size_t extent) {
  LoadedDataset loaded;
  loaded.train_index = ingest_folder(root / "train");
  loaded.data.train = load_images(loaded.train_index, extent);
  loaded.data.classes = loaded.train_index.classes.size();
  if (fs::exists(root / "val")) {
    loaded.val_index = ingest_folder(root / "val");
    if (loaded.val_index.classes != loaded.train_index.classes) {
      throw InputError("class directories of '" + (root / "val").string() + "' differ from the training split");
    }
    loaded.data.val = load_images(loaded.val_index, extent);
  }
  return loaded;
}

void check_synth_spec(const SynthSpec& spec) {
  if (spec.classes < 2) throw InputError("synthetic dataset needs >= 2 classes");
  if (spec.extent < 8) throw InputError("synthetic image extent must be >= 8");
  if (spec.per_class == 0) throw InputError("synthetic dataset needs >= 1 sample per class");
  if (!(spec.noise >= 0.0 && spec.noise < 1.0)) throw InputError("synthetic noise must be in [0,1)");
}

Image8 synth_image(const SynthSpec& spec, std::size_t cls, std::size_t index) {
  check_synth_spec(spec);
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(cls), static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  const double e = static_cast<double>(spec.extent);
  std::uniform_real_distribution<double> jitter(-e / 8.0, e / 8.0);
  std::uniform_int_distribution<int> dark(0, 90), bright(160, 255);

  const double angle = static_cast<double>(cls) * std::numbers::pi / static_cast<double>(spec.classes);
  const double dx = std::cos(angle), dy = std::sin(angle);
  const double cx = (e - 1.0) / 2.0 + jitter(rng), cy = (e - 1.0) / 2.0 + jitter(rng);
  const double half_length = 0.35 * e;
  const double half_width = std::max(0.75, e / 24.0);
  std::array<int, 3> background{}, bar{};
  for (auto& v : background) v = dark(rng);
  for (auto& v : bar) v = bright(rng);

  Image8 image{spec.extent, spec.extent, std::vector<std::uint8_t>(spec.extent * spec.extent * 3)};
  std::uniform_real_distribution<double> noise(-spec.noise * 255.0, spec.noise * 255.0);
  for (std::size_t y = 0; y < spec.extent; ++y) {
    for (std::size_t x = 0; x < spec.extent; ++x) {
      const double rx = static_cast<double>(x) - cx, ry = static_cast<double>(y) - cy;
      const double along = rx * dx + ry * dy;
      const double across = -rx * dy + ry * dx;
      const bool on_bar = std::abs(along) <= half_length && std::abs(across) <= half_width;
      for (std::size_t c = 0; c < 3; ++c) {
        double v = on_bar ? bar[c] : background[c];
        if (spec.noise > 0.0) v += noise(rng);
        image.rgb[(y * spec.extent + x) * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return image;
}

SynthCounts make_synth(const SynthSpec& spec, const fs::path& root) {
  check_synth_spec(spec);
  const std::size_t val_per_class = spec.per_class / 10;
  const std::size_t train_per_class = spec.per_class - val_per_class;
  SynthCounts counts;
  for (std::size_t cls = 0; cls < spec.classes; ++cls) {
    const fs::path train_dir = root / "train" / class_name(cls);
    const fs::path val_dir = root / "val" / class_name(cls);
    fs::create_directories(train_dir);
    if (val_per_class > 0) fs::create_directories(val_dir);
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      const bool to_train = i < train_per_class;
      write_ppm((to_train ? train_dir : val_dir) / sample_name(cls, i), synth_image(spec, cls, i));
      ++(to_train ? counts.train : counts.val);
    }
  }
  return counts;
}

}  // namespace netforge
