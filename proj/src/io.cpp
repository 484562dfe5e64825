#include "pbfgnn/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pbfgnn/error.hpp"

namespace pbfgnn {

namespace {

class ByteWriter {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  std::string out_;
};

// Reads little-endian values; `on_short` is invoked (and must throw) when the
// input ends early.
template <class OnShort>
class ByteReader {
 public:
  ByteReader(std::string_view in, OnShort on_short) : in_(in), on_short_(on_short) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void set_handler(OnShort h) { on_short_ = h; }

 private:
  void need(std::size_t n) {
    if (remaining() < n) on_short_(pos_);
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + k])) << (8 * k);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
  OnShort on_short_;
};

using ShortHandler = std::function<void(std::size_t)>;

void check_magic(ByteReader<ShortHandler>& r, std::string_view magic) {
  const std::size_t at = r.offset();
  if (r.bytes(magic.size()) != magic) throw FormatError("bad magic, expected \"" + std::string(magic) + "\"", at);
}

void check_version(ByteReader<ShortHandler>& r, std::uint32_t writer_version) {
  const std::size_t at = r.offset();
  const std::uint32_t v = r.u32();
  if (v == 0 || v > writer_version)
    throw FormatError("unsupported version " + std::to_string(v) + " (reader supports up to " +
                          std::to_string(writer_version) + ")",
                      at);
}

}  // namespace

std::string encode_history(const ThermalHistory& h) {
  const std::size_t n = static_cast<std::size_t>(h.grid.node_count());
  ByteWriter w;
  w.bytes("MGTH");
  w.u32(kHistoryVersion);
  w.u32(static_cast<std::uint32_t>(h.grid.nx));
  w.u32(static_cast<std::uint32_t>(h.grid.ny));
  w.u32(static_cast<std::uint32_t>(h.frames.size()));
  w.f64(h.dwell);
  w.f64(h.grid.node_spacing);
  for (std::size_t f = 0; f < h.frames.size(); ++f) {
    const ThermalFrame& fr = h.frames[f];
    if (fr.temperature.size() != n) throw InvalidArgument("frame " + std::to_string(f) + " has the wrong node count");
    if (fr.focal_nodes.size() > 0xFFFF) throw InvalidArgument("too many focal nodes in frame " + std::to_string(f));
    w.u32(fr.timestep);
    w.u16(static_cast<std::uint16_t>(fr.focal_nodes.size()));
    for (auto v : fr.focal_nodes) w.u32(v);
    for (float t : fr.temperature) w.f32(t);
  }
  return w.take();
}

ThermalHistory decode_history(std::string_view bytes) {
  ByteReader<ShortHandler> r(bytes, [](std::size_t at) -> void { throw FormatError("truncated header", at); });
  check_magic(r, "MGTH");
  check_version(r, kHistoryVersion);
  const std::size_t dims_at = r.offset();
  const std::uint32_t nx = r.u32(), ny = r.u32(), frames = r.u32();
  if (nx == 0 || ny == 0 || nx > 100000 || ny > 100000) throw FormatError("implausible grid dimensions", dims_at);
  const std::size_t dwell_at = r.offset();
  ThermalHistory h;
  h.dwell = r.f64();
  const double spacing = r.f64();
  if (!std::isfinite(h.dwell) || h.dwell < 0.0) throw FormatError("invalid dwell", dwell_at);
  if (!std::isfinite(spacing) || !(spacing > 0.0)) throw FormatError("invalid node spacing", dwell_at + 8);
  h.grid.nx = static_cast<int>(nx);
  h.grid.ny = static_cast<int>(ny);
  h.grid.node_spacing = spacing;
  h.grid.side_length = spacing * static_cast<double>(nx - 1);

  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  // A frame needs at least 6 + 4n bytes, so a corrupt count cannot force a
  // huge reservation.
  h.frames.reserve(std::min<std::size_t>(frames, r.remaining() / (6 + 4 * n) + 1));
  for (std::uint32_t f = 0; f < frames; ++f) {
    r.set_handler([f](std::size_t) -> void { throw TruncationError(f); });
    ThermalFrame fr;
    fr.timestep = r.u32();
    const std::uint16_t count = r.u16();
    fr.focal_nodes.resize(count);
    for (auto& v : fr.focal_nodes) {
      const std::size_t at = r.offset();
      v = r.u32();
      if (v >= n) throw FormatError("focal node index out of range", at);
    }
    fr.temperature.resize(n);
    for (auto& t : fr.temperature) t = r.f32();
    h.frames.push_back(std::move(fr));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last frame", r.offset());
  return h;
}

std::string encode_checkpoint(const ModelParams& p) {
  if (auto errs = validate_params(p); !errs.empty()) throw InvalidArgument("invalid model: " + errs.front());
  ByteWriter w;
  w.bytes("MGCK");
  w.u32(kCheckpointVersion);
  w.u8(p.architecture == Architecture::SingleLaser ? 0 : 1);
  w.u8(p.aggregation == Aggregation::Symmetric ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(p.layers.size()));
  for (const DenseLayer& l : p.layers) {
    w.u32(static_cast<std::uint32_t>(l.weight.rows()));
    w.u32(static_cast<std::uint32_t>(l.weight.cols()));
    w.u8(l.frozen ? 1 : 0);
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) w.f64(l.weight(i, j));
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) w.f64(l.bias[j]);
  }
  w.u64(p.meta.iterations);
  w.u8(p.meta.loss.kind == LossKind::Mse ? 0 : 1);
  w.f64(p.meta.loss.peak_weight);
  w.f64(p.meta.loss.threshold);
  w.u64(p.meta.seed);
  w.f64(p.scaling.offset);
  w.f64(p.scaling.scale);
  return w.take();
}

ModelParams decode_checkpoint(std::string_view bytes) {
  ByteReader<ShortHandler> r(bytes, [](std::size_t at) -> void { throw FormatError("truncated checkpoint", at); });
  check_magic(r, "MGCK");
  check_version(r, kCheckpointVersion);
  ModelParams p;
  std::size_t at = r.offset();
  const std::uint8_t arch = r.u8();
  if (arch > 1) throw FormatError("unknown architecture code", at);
  p.architecture = arch == 0 ? Architecture::SingleLaser : Architecture::MultiLaser;
  at = r.offset();
  const std::uint8_t agg = r.u8();
  if (agg > 1) throw FormatError("unknown aggregation code", at);
  p.aggregation = agg == 0 ? Aggregation::Symmetric : Aggregation::Mean;
  at = r.offset();
  const std::uint32_t count = r.u32();
  if (count == 0 || count > 64) throw FormatError("implausible layer count", at);

  for (std::uint32_t k = 0; k < count; ++k) {
    at = r.offset();
    const std::uint32_t fin = r.u32(), fout = r.u32();
    if (fin == 0 || fout == 0) throw FormatError("zero layer dimension", at);
    if (k > 0 && fin != static_cast<std::uint32_t>(p.layers.back().weight.cols()))
      throw FormatError("layer " + std::to_string(k) + " input width does not chain", at);
    if ((static_cast<double>(fin) + 1.0) * fout * 8.0 > static_cast<double>(r.remaining()))
      throw FormatError("truncated checkpoint", bytes.size());
    const std::size_t flag_at = r.offset();
    const std::uint8_t frozen = r.u8();
    if (frozen > 1) throw FormatError("invalid frozen flag", flag_at);
    DenseLayer l;
    l.frozen = frozen == 1;
    l.weight.resize(fin, fout);
    for (std::uint32_t i = 0; i < fin; ++i)
      for (std::uint32_t j = 0; j < fout; ++j) l.weight(i, j) = r.f64();
    l.bias.resize(fout);
    for (std::uint32_t j = 0; j < fout; ++j) l.bias[j] = r.f64();
    p.layers.push_back(std::move(l));
  }
  if (p.layers.back().weight.cols() != 1) throw FormatError("last layer width is not 1", at);

  p.meta.iterations = r.u64();
  at = r.offset();
  const std::uint8_t loss = r.u8();
  if (loss > 1) throw FormatError("unknown loss kind", at);
  p.meta.loss.kind = loss == 0 ? LossKind::Mse : LossKind::Weighted;
  p.meta.loss.peak_weight = r.f64();
  p.meta.loss.threshold = r.f64();
  p.meta.seed = r.u64();
  at = r.offset();
  p.scaling.offset = r.f64();
  p.scaling.scale = r.f64();
  if (!std::isfinite(p.scaling.offset) || !std::isfinite(p.scaling.scale) || p.scaling.scale == 0.0)
    throw FormatError("invalid temperature scaling", at);
  if (r.remaining() != 0) throw FormatError("trailing bytes after metadata", r.offset());
  return p;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string encode_plan(const ScanPlan& plan) {
  if (plan.label.find('\n') != std::string::npos) throw InvalidArgument("plan label contains a newline");
  std::string out = "MGPLAN " + std::to_string(kPlanVersion) + "\n";
  out += "grid " + format_double(plan.grid.side_length) + " " + format_double(plan.grid.node_spacing) + "\n";
  out += "lasers " + std::to_string(plan.paths.size()) + "\n";
  out += "label " + plan.label + "\n";
  for (const NodePath& path : plan.paths) {
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(path[k]);
    }
    out += '\n';
  }
  return out;
}

namespace {

struct LineCursor {
  std::string_view text;
  std::size_t pos = 0;

  bool next(std::string_view& line, std::size_t& at) {
    if (pos >= text.size()) return false;
    at = pos;
    const std::size_t end = text.find('\n', pos);
    line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    return true;
  }
};

template <class T>
T parse_number(std::string_view s, std::size_t at, const char* what) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError(std::string("invalid ") + what + " \"" + std::string(s) + "\"", at);
  return v;
}

std::string_view expect_key(std::string_view line, std::string_view key, std::size_t at) {
  if (line.substr(0, key.size() + 1) != std::string(key) + " ")
    throw FormatError("expected \"" + std::string(key) + "\" line", at);
  return line.substr(key.size() + 1);
}

}  // namespace

ScanPlan decode_plan(std::string_view text) {
  LineCursor cur{text};
  std::string_view line;
  std::size_t at = 0;
  auto next = [&](const char* what) {
    if (!cur.next(line, at)) throw FormatError(std::string("missing ") + what + " line", text.size());
  };

  next("header");
  const std::string_view ver = expect_key(line, "MGPLAN", at);
  const int v = parse_number<int>(ver, at, "plan version");
  if (v < 1 || v > kPlanVersion) throw FormatError("unsupported plan version " + std::to_string(v), at);

  next("grid");
  const std::string_view g = expect_key(line, "grid", at);
  const std::size_t sp = g.find(' ');
  if (sp == std::string_view::npos) throw FormatError("grid line needs side and spacing", at);
  ScanPlan plan;
  try {
    plan.grid = make_grid(parse_number<double>(g.substr(0, sp), at, "side length"),
                          parse_number<double>(g.substr(sp + 1), at, "spacing"));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what(), at);
  }

  next("lasers");
  const int lasers = parse_number<int>(expect_key(line, "lasers", at), at, "laser count");
  if (lasers < 1 || lasers > 64) throw FormatError("laser count out of range", at);
  next("label");
  if (line == "label") {
    plan.label.clear();
  } else {
    plan.label = std::string(expect_key(line, "label", at));
  }

  const int n = plan.grid.node_count();
  for (int l = 0; l < lasers; ++l) {
    next("laser path");
    NodePath path;
    std::size_t start = 0;
    while (start < line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) comma = line.size();
      const int node = parse_number<int>(line.substr(start, comma - start), at + start, "node index");
      if (node < 0 || node >= n) throw FormatError("node index out of range", at + start);
      path.push_back(node);
      start = comma + 1;
    }
    plan.paths.push_back(std::move(path));
  }
  while (cur.next(line, at))
    if (!line.empty()) throw FormatError("unexpected content after laser paths", at);
  return plan;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

void persist_history(const ThermalHistory& h, const std::filesystem::path& path) { write_file(path, encode_history(h)); }
ThermalHistory load_history(const std::filesystem::path& path) { return decode_history(read_file(path)); }
void persist_checkpoint(const ModelParams& p, const std::filesystem::path& path) { write_file(path, encode_checkpoint(p)); }
ModelParams load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }
void persist_plan(const ScanPlan& plan, const std::filesystem::path& path) { write_file(path, encode_plan(plan)); }
ScanPlan load_plan(const std::filesystem::path& path) { return decode_plan(read_file(path)); }

std::string train_trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "case,step,train_loss,val_loss\n";
  for (const auto& r : trace)
    out += std::to_string(r.case_index) + "," + std::to_string(r.step) + "," + format_double(r.train_loss) + "," +
           format_double(r.val_loss) + "\n";
  return out;
}

std::string tune_trace_csv(const TuneTrace& trace) {
  std::string out = "iteration,a,b,c,rmse,best_so_far,seconds,a_continuous\n";
  for (std::size_t i = 0; i < trace.evaluations.size(); ++i) {
    const auto& e = trace.evaluations[i];
    out += std::to_string(i + 1) + "," + std::to_string(e.point.a) + "," + format_double(e.point.b) + "," +
           format_double(e.point.c) + "," + format_double(e.rmse) + "," + format_double(e.best_so_far) + "," +
           format_double(e.seconds) + "," + format_double(e.a_continuous) + "\n";
  }
  return out;
}

std::string error_curve_csv(const std::vector<double>& rmse) {
  std::string out = "timestep,rmse\n";
  for (std::size_t t = 0; t < rmse.size(); ++t) out += std::to_string(t) + "," + format_double(rmse[t]) + "\n";
  return out;
}

std::string frame_metrics_csv(const std::vector<FrameMetrics>& frames) {
  std::string out = "case,timestep,rmse,mape,peak_ape,max_peak_ape\n";
  for (const auto& f : frames)
    out += f.case_label + "," + std::to_string(f.timestep) + "," + format_double(f.rmse) + "," + format_double(f.mape) +
           "," + format_double(f.peak_ape) + "," + format_double(f.max_peak_ape) + "\n";
  return out;
}

std::string field_csv(const GridSpec& grid, const Eigen::VectorXd& temperature) {
  if (temperature.size() != grid.node_count()) throw InvalidArgument("field length does not match the grid");
  std::string out = "node,x,y,temperature\n";
  for (int v = 0; v < grid.node_count(); ++v)
    out += std::to_string(v) + "," + format_double(grid.column(v) * grid.node_spacing) + "," +
           format_double(grid.row(v) * grid.node_spacing) + "," + format_double(temperature[v]) + "\n";
  return out;
}

}  // namespace pbfgnn
