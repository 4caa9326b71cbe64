#include "katlas/codec.hpp"

#include <zlib.h>

#include <array>
#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>

namespace katlas {

namespace {

constexpr std::size_t kReadChunk = 16384;
constexpr std::size_t kMaxLine = 256;

void append_decimal(std::string &out, std::uint64_t v) {
  std::array<char, 24> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), end);
}

void append_hex(std::string &out, std::uint64_t v) {
  std::array<char, 24> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, 16);
  out.append(buf.data(), end);
}

template <typename T>
bool parse_number(std::string_view text, T &value, int base = 10) {
  if (text.empty())
    return false;
  auto [end, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value, base);
  return ec == std::errc() && end == text.data() + text.size();
}

CodecError parse_error(std::string_view line, std::uint64_t line_number) {
  return CodecError(CodecError::Kind::Parse,
                    "malformed trace line " + std::to_string(line_number) +
                        ": '" + std::string(line.substr(0, 64)) + "'",
                    line_number);
}

std::string header_text(std::uint32_t block_count, bool addresses,
                        Compression compression) {
  std::string h(kTraceMagic);
  h += "Blocks:";
  append_decimal(h, block_count);
  h += "\nFlags:";
  h += addresses ? "addr" : "noaddr";
  h += "\nCodec:";
  h += to_string(compression);
  h += '\n';
  return h;
}

} // namespace

std::string_view to_string(Compression c) {
  return c == Compression::Deflate ? "deflate" : "none";
}

Compression parse_compression(std::string_view text) {
  if (text == "none")
    return Compression::None;
  if (text == "deflate")
    return Compression::Deflate;
  throw std::invalid_argument("unknown compression '" + std::string(text) +
                              "' (expected none or deflate)");
}

void CodecConfig::validate() const {
  if (burst_bytes < kMinBurst || burst_bytes > kMaxBurst)
    throw std::invalid_argument("burst_bytes must lie in [4096, 131072], got " +
                                std::to_string(burst_bytes));
  if (deflate_level < 1 || deflate_level > 9)
    throw std::invalid_argument("deflate_level must lie in [1, 9], got " +
                                std::to_string(deflate_level));
}

void append_event(std::string &out, const TraceEvent &event) {
  switch (event.kind()) {
  case EventKind::BlockEnter:
    out += "BasicBlock:";
    append_decimal(out, event.block());
    break;
  case EventKind::Load:
  case EventKind::Store: {
    const Address a = event.address();
    out += event.kind() == EventKind::Load ? "LoadAddress:" : "StoreAddress:";
    append_hex(out, a.value);
    out += ',';
    append_decimal(out, a.size);
    break;
  }
  }
  out += '\n';
}

std::string encode_event(const TraceEvent &event) {
  std::string s;
  append_event(s, event);
  return s;
}

TraceEvent decode_line(std::string_view line, std::uint64_t line_number) {
  const auto colon = line.find(':');
  if (colon == std::string_view::npos)
    throw parse_error(line, line_number);
  const std::string_view key = line.substr(0, colon);
  const std::string_view value = line.substr(colon + 1);

  if (key == "BasicBlock") {
    BlockId id = 0;
    if (!parse_number(value, id))
      throw parse_error(line, line_number);
    return TraceEvent::block_enter(id);
  }
  if (key == "LoadAddress" || key == "StoreAddress") {
    const auto comma = value.find(',');
    if (comma == std::string_view::npos)
      throw parse_error(line, line_number);
    std::uint64_t addr = 0;
    std::uint32_t size = 0;
    const std::string_view hex = value.substr(0, comma);
    // Grammar is lowercase only.
    for (char c : hex)
      if (c >= 'A' && c <= 'F')
        throw parse_error(line, line_number);
    if (!parse_number(hex, addr, 16) ||
        !parse_number(value.substr(comma + 1), size) || size == 0)
      throw parse_error(line, line_number);
    return key == "LoadAddress" ? TraceEvent::load(addr, size)
                                : TraceEvent::store(addr, size);
  }
  throw parse_error(line, line_number);
}

// ---------------------------------------------------------------------------
// Writer

struct TraceWriter::Deflater {
  z_stream zs{};
  bool open = false;

  explicit Deflater(int level) {
    // Negative window bits: raw RFC 1951 stream, no zlib wrapper.
    if (deflateInit2(&zs, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) !=
        Z_OK)
      throw CodecError(CodecError::Kind::Compress, "deflateInit2 failed");
    open = true;
  }
  ~Deflater() {
    if (open)
      deflateEnd(&zs);
  }
};

TraceWriter::TraceWriter(std::ostream &sink, std::uint32_t block_count,
                         bool addresses, CodecConfig config)
    : sink_(sink), config_(config) {
  config_.validate();
  buffer_.reserve(config_.burst_bytes + kMaxLine);
  if (config_.compression == Compression::Deflate)
    deflater_ = std::make_unique<Deflater>(config_.deflate_level);
  const std::string header =
      header_text(block_count, addresses, config_.compression);
  emit(header.data(), header.size());
}

TraceWriter::~TraceWriter() = default;

void TraceWriter::emit(const char *data, std::size_t size) {
  sink_.write(data, static_cast<std::streamsize>(size));
  if (!sink_)
    throw CodecError(CodecError::Kind::Sink,
                     "sink write failed; " +
                         std::to_string(stats_.bytes_written) +
                         " bytes durable",
                     stats_.bytes_written);
  stats_.bytes_written += size;
}

void TraceWriter::flush_chunk(std::string_view chunk) {
  ++stats_.flush_count;
  if (!deflater_) {
    emit(chunk.data(), chunk.size());
    return;
  }
  std::array<unsigned char, kReadChunk> out{};
  z_stream &zs = deflater_->zs;
  zs.next_in =
      reinterpret_cast<Bytef *>(const_cast<char *>(chunk.data()));
  zs.avail_in = static_cast<uInt>(chunk.size());
  do {
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    if (deflate(&zs, Z_NO_FLUSH) == Z_STREAM_ERROR)
      throw CodecError(CodecError::Kind::Compress, "deflate failed");
    emit(reinterpret_cast<const char *>(out.data()),
         out.size() - zs.avail_out);
  } while (zs.avail_out == 0);
}

void TraceWriter::write(const TraceEvent &event) {
  if (finished_)
    throw std::logic_error("write after finish");
  const std::size_t before = buffer_.size();
  append_event(buffer_, event);
  stats_.text_bytes += buffer_.size() - before;
  ++stats_.events;
  if (buffer_.size() >= config_.burst_bytes) {
    flush_chunk(std::string_view(buffer_).substr(0, config_.burst_bytes));
    buffer_.erase(0, config_.burst_bytes);
  }
}

WriteStats TraceWriter::finish() {
  if (finished_)
    return stats_;
  finished_ = true;
  const std::size_t before = buffer_.size();
  buffer_ += "End:";
  append_decimal(buffer_, stats_.events);
  buffer_ += '\n';
  stats_.text_bytes += buffer_.size() - before;

  std::size_t pos = 0;
  while (buffer_.size() - pos > 0) {
    const std::size_t n = std::min(config_.burst_bytes, buffer_.size() - pos);
    flush_chunk(std::string_view(buffer_).substr(pos, n));
    pos += n;
  }
  buffer_.clear();

  if (deflater_) {
    std::array<unsigned char, kReadChunk> out{};
    z_stream &zs = deflater_->zs;
    zs.next_in = nullptr;
    zs.avail_in = 0;
    int rc = Z_OK;
    do {
      zs.next_out = out.data();
      zs.avail_out = static_cast<uInt>(out.size());
      rc = deflate(&zs, Z_FINISH);
      if (rc == Z_STREAM_ERROR)
        throw CodecError(CodecError::Kind::Compress, "deflate finish failed");
      emit(reinterpret_cast<const char *>(out.data()),
           out.size() - zs.avail_out);
    } while (rc != Z_STREAM_END);
  }
  sink_.flush();
  return stats_;
}

WriteStats write_trace(const Trace &trace, const CodecConfig &config,
                       std::ostream &sink) {
  TraceWriter writer(sink, trace.block_count, trace.has_addresses(), config);
  for (const TraceEvent &e : trace.events)
    writer.write(e);
  return writer.finish();
}

// ---------------------------------------------------------------------------
// Reader

struct TraceReader::Inflater {
  z_stream zs{};
  bool open = false;
  bool ended = false;
  std::array<unsigned char, kReadChunk> in{};

  Inflater() {
    if (inflateInit2(&zs, -15) != Z_OK)
      throw CodecError(CodecError::Kind::Decode, "inflateInit2 failed");
    open = true;
  }
  ~Inflater() {
    if (open)
      inflateEnd(&zs);
  }
};

namespace {

std::string read_header_line(std::istream &in, std::uint64_t &offset) {
  std::string line;
  char c = 0;
  while (in.get(c)) {
    ++offset;
    if (c == '\n')
      return line;
    line += c;
    if (line.size() > kMaxLine)
      break;
  }
  throw CodecError(CodecError::Kind::Format, "truncated or oversized header");
}

std::string_view header_value(std::string_view line, std::string_view key) {
  if (line.substr(0, key.size()) != key)
    throw CodecError(CodecError::Kind::Format,
                     "expected header field '" + std::string(key) + "'");
  return line.substr(key.size());
}

} // namespace

TraceReader::TraceReader(std::istream &source) : source_(source) {
  std::array<char, kTraceMagic.size()> magic{};
  source_.read(magic.data(), magic.size());
  if (source_.gcount() != static_cast<std::streamsize>(magic.size()) ||
      std::string_view(magic.data(), magic.size()) != kTraceMagic)
    throw CodecError(CodecError::Kind::Format,
                     "bad magic: not a KATLAS01 trace file");
  source_offset_ = magic.size();

  const std::string blocks = read_header_line(source_, source_offset_);
  if (!parse_number(header_value(blocks, "Blocks:"), block_count_))
    throw CodecError(CodecError::Kind::Format, "bad Blocks header");

  const std::string flags = read_header_line(source_, source_offset_);
  const std::string_view f = header_value(flags, "Flags:");
  if (f == "addr")
    addresses_ = true;
  else if (f != "noaddr")
    throw CodecError(CodecError::Kind::Format, "bad Flags header");

  const std::string codec = read_header_line(source_, source_offset_);
  try {
    compression_ = parse_compression(header_value(codec, "Codec:"));
  } catch (const std::invalid_argument &) {
    throw CodecError(CodecError::Kind::Format, "bad Codec header");
  }
  if (compression_ == Compression::Deflate)
    inflater_ = std::make_unique<Inflater>();
}

TraceReader::~TraceReader() = default;

bool TraceReader::fill() {
  if (source_done_)
    return false;
  if (text_pos_ > 0) {
    text_.erase(0, text_pos_);
    text_pos_ = 0;
  }
  if (!inflater_) {
    std::array<char, kReadChunk> buf{};
    source_.read(buf.data(), buf.size());
    const auto got = static_cast<std::size_t>(source_.gcount());
    source_offset_ += got;
    if (got == 0) {
      source_done_ = true;
      return false;
    }
    text_.append(buf.data(), got);
    peak_buffer_ = std::max(peak_buffer_, text_.size());
    return true;
  }

  Inflater &inf = *inflater_;
  z_stream &zs = inf.zs;
  std::array<unsigned char, kReadChunk> out{};
  const std::size_t before = text_.size();
  while (text_.size() == before) {
    if (inf.ended) {
      source_done_ = true;
      return false;
    }
    if (zs.avail_in == 0) {
      source_.read(reinterpret_cast<char *>(inf.in.data()), inf.in.size());
      const auto got = static_cast<std::size_t>(source_.gcount());
      if (got == 0)
        throw CodecError(CodecError::Kind::Decode,
                         "truncated DEFLATE stream at byte offset " +
                             std::to_string(source_offset_),
                         source_offset_);
      source_offset_ += got;
      zs.next_in = inf.in.data();
      zs.avail_in = static_cast<uInt>(got);
    }
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_NO_FLUSH);
    if (rc == Z_STREAM_END) {
      inf.ended = true;
    } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
      const std::uint64_t at = source_offset_ - zs.avail_in;
      throw CodecError(CodecError::Kind::Decode,
                       "corrupt DEFLATE stream near byte offset " +
                           std::to_string(at),
                       at);
    }
    text_.append(reinterpret_cast<const char *>(out.data()),
                 out.size() - zs.avail_out);
  }
  peak_buffer_ = std::max(peak_buffer_, text_.size() + inf.in.size());
  return true;
}

std::optional<std::string_view> TraceReader::next_line() {
  for (;;) {
    const auto nl = text_.find('\n', text_pos_);
    if (nl != std::string::npos) {
      std::string_view line(text_.data() + text_pos_, nl - text_pos_);
      text_pos_ = nl + 1;
      ++line_number_;
      return line;
    }
    if (text_.size() - text_pos_ > kMaxLine)
      throw parse_error(std::string_view(text_).substr(text_pos_),
                        line_number_ + 1);
    if (!fill()) {
      if (text_.size() > text_pos_)
        throw CodecError(CodecError::Kind::Decode,
                         "truncated payload: partial final line at byte " +
                             std::to_string(source_offset_),
                         source_offset_);
      return std::nullopt;
    }
  }
}

std::optional<TraceEvent> TraceReader::next() {
  if (ended_)
    return std::nullopt;
  const auto line = next_line();
  if (!line) {
    throw CodecError(CodecError::Kind::Decode,
                     "truncated payload: missing End marker after " +
                         std::to_string(events_) + " events",
                     source_offset_);
  }
  if (line->substr(0, 4) == "End:") {
    std::uint64_t count = 0;
    if (!parse_number(line->substr(4), count) || count != events_)
      throw parse_error(*line, line_number_);
    ended_ = true;
    if (next_line())
      throw CodecError(CodecError::Kind::Parse,
                       "data after End marker at line " +
                           std::to_string(line_number_),
                       line_number_);
    return std::nullopt;
  }
  TraceEvent e = decode_line(*line, line_number_);
  if (e.is_block() && e.block() >= block_count_)
    throw CodecError(CodecError::Kind::Parse,
                     "block id out of range at line " +
                         std::to_string(line_number_),
                     line_number_);
  if (e.is_memory() && events_ == 0)
    throw CodecError(CodecError::Kind::Parse,
                     "memory event before any block at line 1", 1);
  ++events_;
  return e;
}

Trace read_trace(std::istream &source) {
  TraceReader reader(source);
  Trace t;
  t.block_count = reader.block_count();
  while (auto e = reader.next())
    t.events.push_back(*e);
  return t;
}

// ---------------------------------------------------------------------------
// Naive baseline

namespace {

void append_padded(std::string &out, std::string line) {
  line.resize(kNaiveLineWidth, ' ');
  out += line;
  out += '\n';
}

} // namespace

std::string naive_dump(const Trace &trace, std::size_t lines_per_block) {
  static constexpr std::array<const char *, 4> ops = {
      "add nsw i64", "mul nsw i64", "icmp slt i64", "br i1"};
  std::string out;
  for (const TraceEvent &e : trace.events) {
    if (e.is_block()) {
      const std::string b = std::to_string(e.block());
      for (std::size_t j = 0; j < lines_per_block; ++j)
        append_padded(out, "  %bb" + b + "." + std::to_string(j) + " = " +
                               ops[j % ops.size()] + " %bb" + b + ", " +
                               std::to_string(j + 1));
    } else {
      const Address a = e.address();
      std::string addr;
      append_hex(addr, a.value);
      if (e.kind() == EventKind::Load)
        append_padded(out, "  %ld = load i" + std::to_string(8 * a.size) +
                               ", ptr 0x" + addr);
      else
        append_padded(out, "  store i" + std::to_string(8 * a.size) +
                               " %v, ptr 0x" + addr);
    }
  }
  return out;
}

} // namespace katlas
