#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "netforge/training.hpp"

namespace netforge {

// 8-bit RGB raster, interleaved row-major.
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  bool operator==(const Image8&) const = default;
};

// Binary PPM (P6, maxval 255). Throws FormatError on anything else.
Image8 decode_ppm(const std::string& bytes);
std::string encode_ppm(const Image8& image);
Image8 read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image8& image);

// Nearest-neighbour resize to extent x extent, returned as a [3,E,E] float tensor
// of raw 0..255 values.
Tensor<float> to_tensor(const Image8& image, std::size_t extent);

struct DatasetIndex {
  std::filesystem::path root;
  std::vector<std::string> classes;                 // sorted
  std::vector<std::pair<std::string, int>> samples; // (path relative to root, class index)
  std::string split;                                // last component of root
  std::array<double, 3> means{0.0, 0.0, 0.0};       // per-channel, over all samples' pixels
  std::vector<std::string> warnings;                // skipped files
};

// root/<class>/<image>.ppm. Non-PPM files are skipped with a warning; an empty
// class directory or a root without classes throws InputError.
DatasetIndex ingest_folder(const std::filesystem::path& root);

LabeledImages load_images(const DatasetIndex& index, std::size_t extent);

struct LoadedDataset {
  Dataset data;
  DatasetIndex train_index;
  DatasetIndex val_index;
};

// root/train and root/val; val may be absent. Class lists must agree.
LoadedDataset load_dataset(const std::filesystem::path& root, std::size_t extent);

struct SynthSpec {
  std::size_t classes = 10;
  std::size_t per_class = 200;
  std::size_t extent = 32;
  double noise = 0.1;  // uniform noise amplitude as a fraction of full scale, in [0,1)
  std::uint64_t seed = 1;
};

void check_synth_spec(const SynthSpec& spec);

// Class k draws a bar at angle k*180/classes degrees with jittered centre,
// random colours and uniform noise; deterministic in (seed, class, index).
Image8 synth_image(const SynthSpec& spec, std::size_t cls, std::size_t index);

struct SynthCounts {
  std::size_t train = 0;
  std::size_t val = 0;
};

// Per class the first per_class - per_class/10 images go to root/train, the rest to root/val.
SynthCounts make_synth(const SynthSpec& spec, const std::filesystem::path& root);

}  // namespace netforge
