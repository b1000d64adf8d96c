#include "pdmala/trace_io.hpp"

#include "pdmala/format.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace pdmala {

namespace {

Error io_error(const std::string& what) { return Error(ErrorCode::io, what); }
Error parse_error(const std::string& what) { return Error(ErrorCode::parse, what); }

constexpr char kMagic[8] = {'P', 'D', 'M', 'T', 'R', 'A', 'C', 'E'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw parse_error("truncated binary trace");
  return value;
}

}  // namespace

void write_trace_csv(std::ostream& out, const ChainTrace& trace) {
  const Index n = trace.iterations();
  const Index m = trace.dimension();
  const bool adjusted = trace.adjusted;
  out << "# pdmala-trace v" << kTraceFormatVersion << " n=" << n << " m=" << m
      << " adjusted=" << (adjusted ? 1 : 0) << " acceptance_rate=" << format_double(trace.acceptance_rate)
      << " wall_time=" << format_double(trace.wall_time) << '\n';
  for (Index j = 0; j < m; ++j) out << 'x' << (j + 1) << ',';
  out << "accepted\n";
  std::string line;
  for (Index t = 0; t < n; ++t) {
    line.clear();
    for (Index j = 0; j < m; ++j) {
      line += format_double(trace.states(t, j));
      line += ',';
    }
    if (t > 0 && adjusted) line += trace.accepted[static_cast<std::size_t>(t - 1)] ? '1' : '0';
    line += '\n';
    out << line;
  }
}

void write_trace_csv(const std::string& path, const ChainTrace& trace) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path + " for writing");
  write_trace_csv(out, trace);
  if (!out) throw io_error("failed writing " + path);
}

static std::string header_field(const std::string& header, const std::string& key) {
  const std::string token = " " + key + "=";
  const auto pos = header.find(token);
  if (pos == std::string::npos) throw parse_error("trace header lacks '" + key + "'");
  const auto begin = pos + token.size();
  const auto end = header.find(' ', begin);
  return header.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

ChainTrace read_trace_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# pdmala-trace v", 0) != 0) {
    throw parse_error("not a pdmala trace CSV");
  }
  const int version = std::stoi(header.substr(16, header.find(' ', 16) - 16));
  if (version != kTraceFormatVersion) throw parse_error("unsupported trace version " + std::to_string(version));
  const Index n = std::stoll(header_field(header, "n"));
  const Index m = std::stoll(header_field(header, "m"));
  const bool adjusted = header_field(header, "adjusted") == "1";
  ChainTrace trace;
  trace.adjusted = adjusted;
  trace.acceptance_rate = std::stod(header_field(header, "acceptance_rate"));
  trace.wall_time = std::stod(header_field(header, "wall_time"));
  std::string line;
  std::getline(in, line);  // column names
  trace.states.resize(n, m);
  for (Index t = 0; t < n; ++t) {
    if (!std::getline(in, line)) throw parse_error("trace CSV ends early at row " + std::to_string(t));
    std::size_t pos = 0;
    for (Index j = 0; j < m; ++j) {
      const auto comma = line.find(',', pos);
      if (comma == std::string::npos) throw parse_error("short trace row " + std::to_string(t));
      trace.states(t, j) = parse_double(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    if (adjusted && t > 0) trace.accepted.push_back(line.substr(pos) == "1");
  }
  return trace;
}

void write_trace_binary(const std::string& path, const ChainTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  const bool adjusted = trace.adjusted;
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kTraceFormatVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(trace.iterations()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(trace.dimension()));
  put<std::uint8_t>(out, adjusted ? 1 : 0);
  put<double>(out, trace.acceptance_rate);
  put<double>(out, trace.wall_time);
  // Eigen's default storage is column major, so each column is contiguous.
  out.write(reinterpret_cast<const char*>(trace.states.data()),
            static_cast<std::streamsize>(sizeof(double) * trace.states.size()));
  if (adjusted) {
    std::vector<char> flags(trace.accepted.begin(), trace.accepted.end());
    out.write(flags.data(), static_cast<std::streamsize>(flags.size()));
  }
  if (!out) throw io_error("failed writing " + path);
}

ChainTrace read_trace_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw parse_error(path + " is not a binary trace");
  const auto version = get<std::uint32_t>(in);
  if (version != kTraceFormatVersion) throw parse_error("unsupported trace version " + std::to_string(version));
  const auto n = static_cast<Index>(get<std::uint64_t>(in));
  const auto m = static_cast<Index>(get<std::uint64_t>(in));
  const bool adjusted = get<std::uint8_t>(in) != 0;
  ChainTrace trace;
  trace.adjusted = adjusted;
  trace.acceptance_rate = get<double>(in);
  trace.wall_time = get<double>(in);
  trace.states.resize(n, m);
  in.read(reinterpret_cast<char*>(trace.states.data()),
          static_cast<std::streamsize>(sizeof(double) * trace.states.size()));
  if (!in) throw parse_error("truncated binary trace");
  if (adjusted && n > 1) {
    std::vector<char> flags(static_cast<std::size_t>(n - 1));
    in.read(flags.data(), static_cast<std::streamsize>(flags.size()));
    if (!in) throw parse_error("truncated binary trace");
    trace.accepted.assign(flags.begin(), flags.end());
  }
  return trace;
}

ChainTrace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (in && std::memcmp(magic, kMagic, sizeof(magic)) == 0) return read_trace_binary(path);
  in.clear();
  in.seekg(0);
  return read_trace_csv(in);
}

}  // namespace pdmala
