#include "vcs/vcub.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

static_assert(std::endian::native == std::endian::little,
              "VCUB serialization assumes a little-endian host");

namespace vcs {

std::size_t dtype_size(VcubDtype d) {
  switch (d) {
    case VcubDtype::f32:
      return 4;
    case VcubDtype::f64:
      return 8;
    case VcubDtype::u8:
      return 1;
  }
  throw ParseError("VCUB: unknown dtype byte");
}

std::size_t VcubRecord::numel() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

VcubRecord VcubRecord::make_f32(std::string name, std::vector<std::uint32_t> dims,
                                const float* src) {
  VcubRecord r;
  r.name = std::move(name);
  r.dtype = VcubDtype::f32;
  r.dims = std::move(dims);
  r.payload.resize(r.numel() * 4);
  std::memcpy(r.payload.data(), src, r.payload.size());
  return r;
}

VcubRecord VcubRecord::make_f64(std::string name, std::vector<std::uint32_t> dims,
                                const double* src) {
  VcubRecord r;
  r.name = std::move(name);
  r.dtype = VcubDtype::f64;
  r.dims = std::move(dims);
  r.payload.resize(r.numel() * 8);
  std::memcpy(r.payload.data(), src, r.payload.size());
  return r;
}

VcubRecord VcubRecord::make_u8(std::string name, std::vector<std::uint32_t> dims,
                               const unsigned char* src) {
  VcubRecord r;
  r.name = std::move(name);
  r.dtype = VcubDtype::u8;
  r.dims = std::move(dims);
  r.payload.assign(src, src + r.numel());
  return r;
}

std::vector<float> VcubRecord::as_f32() const {
  std::vector<float> out(numel());
  if (dtype == VcubDtype::f32) {
    std::memcpy(out.data(), payload.data(), payload.size());
  } else if (dtype == VcubDtype::f64) {
    const double* p = reinterpret_cast<const double*>(payload.data());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(p[i]);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(payload[i]);
  }
  return out;
}

std::vector<double> VcubRecord::as_f64() const {
  std::vector<double> out(numel());
  if (dtype == VcubDtype::f64) {
    std::memcpy(out.data(), payload.data(), payload.size());
  } else if (dtype == VcubDtype::f32) {
    const float* p = reinterpret_cast<const float*>(payload.data());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(p[i]);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(payload[i]);
  }
  return out;
}

const VcubRecord* VcubFile::find(const std::string& name) const {
  for (const VcubRecord& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const VcubRecord& VcubFile::require(const std::string& name) const {
  const VcubRecord* r = find(name);
  if (r == nullptr) throw ParseError("VCUB: missing record \"" + name + "\"");
  return *r;
}

void VcubFile::add(VcubRecord record) {
  if (find(record.name) != nullptr) {
    throw ParseError("VCUB: duplicate record name \"" + record.name + "\"");
  }
  records.push_back(std::move(record));
}

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const unsigned char* p, std::size_t n) : p_(p), n_(n) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    const unsigned char* b = take(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    const unsigned char* b = take(4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  const unsigned char* take(std::size_t k) {
    if (pos_ + k > n_) throw ParseError("VCUB: truncated file");
    const unsigned char* r = p_ + pos_;
    pos_ += k;
    return r;
  }
  bool done() const { return pos_ == n_; }

 private:
  const unsigned char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace

VcubFile vcub_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open \"" + path + "\" for reading");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  Reader r(buf.data(), buf.size());
  const unsigned char* magic = r.take(4);
  if (std::memcmp(magic, "VCUB", 4) != 0) throw ParseError("VCUB: bad magic in \"" + path + "\"");
  const std::uint8_t version = r.u8();
  if (version != 1) throw ParseError("VCUB: unsupported version " + std::to_string(version));
  const std::uint16_t count = r.u16();

  VcubFile file;
  std::set<std::string> names;
  for (std::uint16_t i = 0; i < count; ++i) {
    VcubRecord rec;
    const std::uint16_t name_len = r.u16();
    const unsigned char* nm = r.take(name_len);
    rec.name.assign(reinterpret_cast<const char*>(nm), name_len);
    const std::uint8_t dt = r.u8();
    if (dt > 2) throw ParseError("VCUB: invalid dtype byte for \"" + rec.name + "\"");
    rec.dtype = static_cast<VcubDtype>(dt);
    const std::uint8_t ndim = r.u8();
    rec.dims.resize(ndim);
    for (std::uint8_t d = 0; d < ndim; ++d) rec.dims[d] = r.u32();
    const std::size_t bytes = rec.numel() * dtype_size(rec.dtype);
    const unsigned char* pl = r.take(bytes);
    rec.payload.assign(pl, pl + bytes);
    if (!names.insert(rec.name).second) {
      throw ParseError("VCUB: duplicate record name \"" + rec.name + "\"");
    }
    file.records.push_back(std::move(rec));
  }
  if (!r.done()) throw ParseError("VCUB: trailing bytes in \"" + path + "\"");
  return file;
}

void vcub_write(const std::string& path, const VcubFile& file) {
  if (file.records.size() > 0xffff) throw CapacityError("VCUB: too many records");
  std::string out;
  out.append("VCUB");
  out.push_back(static_cast<char>(1));
  put_u16(out, static_cast<std::uint16_t>(file.records.size()));
  for (const VcubRecord& rec : file.records) {
    if (rec.name.size() > 0xffff) throw CapacityError("VCUB: record name too long");
    if (rec.dims.size() > 0xff) throw CapacityError("VCUB: too many dims");
    if (rec.payload.size() != rec.numel() * dtype_size(rec.dtype)) {
      throw ParseError("VCUB: payload size inconsistent for \"" + rec.name + "\"");
    }
    put_u16(out, static_cast<std::uint16_t>(rec.name.size()));
    out.append(rec.name);
    out.push_back(static_cast<char>(rec.dtype));
    out.push_back(static_cast<char>(rec.dims.size()));
    for (std::uint32_t d : rec.dims) put_u32(out, d);
    out.append(reinterpret_cast<const char*>(rec.payload.data()), rec.payload.size());
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open \"" + tmp + "\" for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed for \"" + tmp + "\"");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to \"" + path + "\" failed: " + ec.message());
}

VcubRecord record_from_mask(const MaskCube& m) {
  return VcubRecord::make_f64("mask",
                              {static_cast<std::uint32_t>(m.w), static_cast<std::uint32_t>(m.h),
                               static_cast<std::uint32_t>(m.t)},
                              m.data.data());
}

VcubRecord record_mask_kind(const MaskCube& m) {
  const unsigned char kind = m.kind == MaskKind::binary ? 0 : 1;
  return VcubRecord::make_u8("mask_kind", {1}, &kind);
}

MaskCube mask_from_records(const VcubFile& f) {
  const VcubRecord& r = f.require("mask");
  if (r.dims.size() != 3) throw ParseError("VCUB: \"mask\" must have dims [W,H,T]");
  MaskKind kind = MaskKind::binary;
  if (const VcubRecord* k = f.find("mask_kind"); k != nullptr && k->numel() >= 1) {
    kind = k->payload[0] == 0 ? MaskKind::binary : MaskKind::continuous;
  }
  MaskCube m(static_cast<int>(r.dims[0]), static_cast<int>(r.dims[1]),
             static_cast<int>(r.dims[2]), kind);
  m.data = r.as_f64();
  return m;
}

VcubRecord record_from_video(const std::string& name, const VideoCube& v) {
  std::vector<std::uint32_t> dims = {static_cast<std::uint32_t>(v.w),
                                     static_cast<std::uint32_t>(v.h),
                                     static_cast<std::uint32_t>(v.t)};
  if (v.colorspace == ColorSpace::rgb) dims.push_back(3);
  return VcubRecord::make_f64(name, std::move(dims), v.data.data());
}

VideoCube video_from_record(const VcubRecord& r) {
  if (r.dims.size() == 3) {
    VideoCube v(static_cast<int>(r.dims[0]), static_cast<int>(r.dims[1]),
                static_cast<int>(r.dims[2]), ColorSpace::gray);
    v.data = r.as_f64();
    return v;
  }
  if (r.dims.size() == 4 && r.dims[3] == 3) {
    VideoCube v(static_cast<int>(r.dims[0]), static_cast<int>(r.dims[1]),
                static_cast<int>(r.dims[2]), ColorSpace::rgb);
    v.data = r.as_f64();
    return v;
  }
  throw ParseError("VCUB: video record \"" + r.name + "\" must have dims [W,H,T] or [W,H,T,3]");
}

VcubRecord record_from_measurement(const Measurement& y) {
  return VcubRecord::make_f64(
      "y", {static_cast<std::uint32_t>(y.w), static_cast<std::uint32_t>(y.h)}, y.data.data());
}

Measurement measurement_from_records(const VcubFile& f) {
  const VcubRecord& r = f.require("y");
  if (r.dims.size() != 2) throw ParseError("VCUB: \"y\" must have dims [W,H]");
  Measurement y(static_cast<int>(r.dims[0]), static_cast<int>(r.dims[1]));
  y.data = r.as_f64();
  if (const VcubRecord* s = f.find("noise_sigma"); s != nullptr && s->numel() >= 1) {
    y.noise_sigma = s->as_f64()[0];
  }
  return y;
}

}  // namespace vcs
