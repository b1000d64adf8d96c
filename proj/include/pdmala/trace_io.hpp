#pragma once

#include "pdmala/samplers.hpp"

#include <iosfwd>
#include <string>

namespace pdmala {

// CSV layout:
//   # pdmala-trace v1 n=<rows> m=<cols> adjusted=<0|1> acceptance_rate=<r> wall_time=<s>
//   x1,...,xm,accepted
//   <row>...
// The accepted flag of row t reports whether the move into row t was
// accepted; row 0 and unadjusted chains leave it empty.
inline constexpr int kTraceFormatVersion = 1;

void write_trace_csv(std::ostream& out, const ChainTrace& trace);
void write_trace_csv(const std::string& path, const ChainTrace& trace);
ChainTrace read_trace_csv(std::istream& in);

// Binary columnar layout, little endian:
//   char[8] "PDMTRACE", u32 version, u64 n, u64 m, u8 adjusted,
//   f64 acceptance_rate, f64 wall_time,
//   m columns of n f64 each, then (adjusted only) n-1 u8 accepted flags.
void write_trace_binary(const std::string& path, const ChainTrace& trace);
ChainTrace read_trace_binary(const std::string& path);

/// Dispatches on the file magic.
ChainTrace read_trace(const std::string& path);

}  // namespace pdmala
