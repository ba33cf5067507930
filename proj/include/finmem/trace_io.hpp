#pragma once

#include "finmem/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace finmem {

/// One JSON object per step, tagged with the episode's seed, stream and tau.
void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace);

/**
 * Columnar dump of a batch of episodes.
 *
 *   "FMTRACE1"                       8 bytes
 *   field count                      u32
 *   per field: type code u8 (0 = u64, 1 = f64), name length u16, name bytes
 *   row count                        u64
 *   one little-endian array per field, in header order
 *
 * Fields: stream, k, x, s, u, r.
 */
void write_trace_columnar(std::ostream& out, const std::vector<EpisodeTrace>& traces);

struct ColumnarTrace {
    std::vector<std::string> fields;
    std::vector<std::uint64_t> stream, k, x, s, u;
    std::vector<double> r;
};

/// Throws std::runtime_error on a malformed stream.
ColumnarTrace read_trace_columnar(std::istream& in);

} // namespace finmem
