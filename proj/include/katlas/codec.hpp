#pragma once

// Text trace encoding.
//
// File layout:
//   KATLAS01                      8-byte magic, no newline
//   Blocks:<n>\n
//   Flags:<addr|noaddr>\n
//   Codec:<none|deflate>\n
//   payload                       raw text, or one raw DEFLATE stream
//
// Payload lines:
//   BasicBlock:<decimal id>\n
//   LoadAddress:<lowercase hex>,<decimal size>\n
//   StoreAddress:<lowercase hex>,<decimal size>\n
//   End:<decimal event count>\n   exactly once, last
//
// The End line makes truncation detectable in both payload modes.

#include "katlas/trace.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace katlas {

inline constexpr std::string_view kTraceMagic = "KATLAS01";

enum class Compression { None, Deflate };

std::string_view to_string(Compression c);
Compression parse_compression(std::string_view text);

struct CodecConfig {
  static constexpr std::size_t kMinBurst = 4096;
  static constexpr std::size_t kMaxBurst = 131072;

  std::size_t burst_bytes = 65536;
  Compression compression = Compression::Deflate;
  int deflate_level = 6;

  /// Throws std::invalid_argument when out of range.
  void validate() const;
};

class CodecError : public std::runtime_error {
public:
  enum class Kind { Format, Decode, Parse, Sink, Compress };

  CodecError(Kind kind, const std::string &what, std::uint64_t where = 0)
      : std::runtime_error(what), kind_(kind), where_(where) {}

  Kind kind() const { return kind_; }
  /// Byte offset (Decode, Sink) or 1-based line number (Parse).
  std::uint64_t where() const { return where_; }

private:
  Kind kind_;
  std::uint64_t where_;
};

/// Appends the payload line for one event.
void append_event(std::string &out, const TraceEvent &event);
std::string encode_event(const TraceEvent &event);

/// Parses one payload line (without its newline). Throws CodecError(Parse).
TraceEvent decode_line(std::string_view line, std::uint64_t line_number);

struct WriteStats {
  std::uint64_t events = 0;
  std::uint64_t text_bytes = 0;    ///< uncompressed payload bytes
  std::uint64_t bytes_written = 0; ///< bytes durable at the sink
  std::uint64_t flush_count = 0;   ///< chunks handed to compressor/sink
};

/// Burst-buffered trace writer. Payload text accumulates in a buffer and is
/// handed on in chunks of exactly burst_bytes; the remainder goes out at
/// finish(). Nothing reaches the sink between flushes.
class TraceWriter {
public:
  TraceWriter(std::ostream &sink, std::uint32_t block_count, bool addresses,
              CodecConfig config = {});
  ~TraceWriter();
  TraceWriter(const TraceWriter &) = delete;
  TraceWriter &operator=(const TraceWriter &) = delete;

  void write(const TraceEvent &event);
  /// Writes the End line, flushes, and terminates the DEFLATE stream.
  WriteStats finish();
  const WriteStats &stats() const { return stats_; }

private:
  void flush_chunk(std::string_view chunk);
  void emit(const char *data, std::size_t size);

  struct Deflater;

  std::ostream &sink_;
  CodecConfig config_;
  std::string buffer_;
  std::unique_ptr<Deflater> deflater_;
  WriteStats stats_;
  bool finished_ = false;
};

WriteStats write_trace(const Trace &trace, const CodecConfig &config,
                       std::ostream &sink);

/// Streaming decoder. Memory use is bounded by the inflate window and a
/// single read chunk, independent of trace length.
class TraceReader {
public:
  explicit TraceReader(std::istream &source);
  ~TraceReader();
  TraceReader(const TraceReader &) = delete;
  TraceReader &operator=(const TraceReader &) = delete;

  std::uint32_t block_count() const { return block_count_; }
  bool has_addresses() const { return addresses_; }
  Compression compression() const { return compression_; }

  /// Next event, or nullopt after the End line has been verified.
  std::optional<TraceEvent> next();

  /// Peak bytes held in the reader's own buffers.
  std::size_t peak_buffer_bytes() const { return peak_buffer_; }

private:
  bool fill();
  std::optional<std::string_view> next_line();

  struct Inflater;

  std::istream &source_;
  std::uint32_t block_count_ = 0;
  bool addresses_ = false;
  Compression compression_ = Compression::None;
  std::unique_ptr<Inflater> inflater_;
  std::string text_;
  std::size_t text_pos_ = 0;
  std::uint64_t line_number_ = 0;
  std::uint64_t events_ = 0;
  std::uint64_t source_offset_ = 0;
  std::size_t peak_buffer_ = 0;
  bool source_done_ = false;
  bool ended_ = false;
};

Trace read_trace(std::istream &source);

/// The "no processing" baseline: every event spelled out as fixed-width
/// synthetic IR text of kNaiveLineWidth characters plus newline. A block
/// event takes `lines_per_block` instruction lines.
inline constexpr std::size_t kNaiveLineWidth = 40;
std::string naive_dump(const Trace &trace, std::size_t lines_per_block = 1);

} // namespace katlas
