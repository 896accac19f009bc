#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcs/cube.hpp"

namespace vcs {

enum class VcubDtype : std::uint8_t { f32 = 0, f64 = 1, u8 = 2 };

std::size_t dtype_size(VcubDtype d);

/// One named tensor record of a VCUB container. Payload is little-endian,
/// row-major over dims.
struct VcubRecord {
  std::string name;
  VcubDtype dtype = VcubDtype::f32;
  std::vector<std::uint32_t> dims;
  std::vector<unsigned char> payload;

  std::size_t numel() const;

  static VcubRecord make_f32(std::string name, std::vector<std::uint32_t> dims,
                             const float* src);
  static VcubRecord make_f64(std::string name, std::vector<std::uint32_t> dims,
                             const double* src);
  static VcubRecord make_u8(std::string name, std::vector<std::uint32_t> dims,
                            const unsigned char* src);

  std::vector<float> as_f32() const;    // converts from any dtype
  std::vector<double> as_f64() const;   // converts from any dtype
};

struct VcubFile {
  std::vector<VcubRecord> records;

  const VcubRecord* find(const std::string& name) const;
  const VcubRecord& require(const std::string& name) const;
  void add(VcubRecord record);  // rejects duplicate names
};

/// Magic "VCUB", version 1, u16 record count; see VcubRecord for the record
/// layout. Writing goes through a temp file and a rename.
VcubFile vcub_read(const std::string& path);
void vcub_write(const std::string& path, const VcubFile& file);

// Cube bridging. Masks serialize as records "mask" (f64, dims [W,H,T]) and
// "mask_kind" (u8, [1]); videos as "video"/"x" (f64, [W,H,T] or [W,H,T,3]);
// measurements as "y" (f64, [W,H]) plus "noise_sigma" (f64, [1]).
VcubRecord record_from_mask(const MaskCube& m);
VcubRecord record_mask_kind(const MaskCube& m);
MaskCube mask_from_records(const VcubFile& f);
VcubRecord record_from_video(const std::string& name, const VideoCube& v);
VideoCube video_from_record(const VcubRecord& r);
VcubRecord record_from_measurement(const Measurement& y);
Measurement measurement_from_records(const VcubFile& f);

}  // namespace vcs
