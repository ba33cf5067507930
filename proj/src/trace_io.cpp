#include "finmem/trace_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace finmem {

void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace) {
    for (const auto& step : trace.steps) {
        const nlohmann::ordered_json line{{"seed", trace.seed}, {"stream", trace.stream},
                                          {"k", step.k},        {"x", step.x},
                                          {"s", step.s},        {"u", step.u},
                                          {"r", step.r},        {"tau", trace.tau},
                                          {"truncated", trace.truncated}};
        out << line.dump() << '\n';
    }
}

namespace {

constexpr char kMagic[8] = {'F', 'M', 'T', 'R', 'A', 'C', 'E', '1'};

template <class T>
void put_le(std::ostream& out, T value) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) bits = std::bit_cast<std::uint64_t>(value);
    else bits = std::uint64_t(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.put(char((bits >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(std::istream& in) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) throw std::runtime_error("columnar trace: truncated stream");
        bits |= std::uint64_t(static_cast<unsigned char>(c)) << (8 * i);
    }
    if constexpr (std::is_same_v<T, double>) return std::bit_cast<double>(bits);
    else return T(bits);
}

struct Field {
    const char* name;
    std::uint8_t type;
};
constexpr Field kFields[] = {{"stream", 0}, {"k", 0}, {"x", 0}, {"s", 0}, {"u", 0}, {"r", 1}};

} // namespace

void write_trace_columnar(std::ostream& out, const std::vector<EpisodeTrace>& traces) {
    out.write(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, std::size(kFields));
    for (const auto& f : kFields) {
        put_le<std::uint8_t>(out, f.type);
        put_le<std::uint16_t>(out, std::uint16_t(std::strlen(f.name)));
        out.write(f.name, std::streamsize(std::strlen(f.name)));
    }
    std::uint64_t rows = 0;
    for (const auto& t : traces) rows += t.steps.size();
    put_le<std::uint64_t>(out, rows);

    for (const auto& t : traces)
        for (std::size_t i = 0; i < t.steps.size(); ++i) put_le<std::uint64_t>(out, t.stream);
    auto column = [&](auto get) {
        for (const auto& t : traces)
            for (const auto& step : t.steps) put_le(out, get(step));
    };
    column([](const EpisodeStep& s) { return std::uint64_t(s.k); });
    column([](const EpisodeStep& s) { return std::uint64_t(s.x); });
    column([](const EpisodeStep& s) { return std::uint64_t(s.s); });
    column([](const EpisodeStep& s) { return std::uint64_t(s.u); });
    column([](const EpisodeStep& s) { return s.r; });
    if (!out) throw std::runtime_error("columnar trace: write failed");
}

ColumnarTrace read_trace_columnar(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw std::runtime_error("columnar trace: bad magic");
    const auto n_fields = get_le<std::uint32_t>(in);
    if (n_fields != std::size(kFields)) throw std::runtime_error("columnar trace: unexpected field count");
    ColumnarTrace out;
    for (std::uint32_t i = 0; i < n_fields; ++i) {
        const auto type = get_le<std::uint8_t>(in);
        const auto len = get_le<std::uint16_t>(in);
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw std::runtime_error("columnar trace: truncated header");
        if (name != kFields[i].name || type != kFields[i].type)
            throw std::runtime_error("columnar trace: unexpected field '" + name + "'");
        out.fields.push_back(std::move(name));
    }
    const auto rows = get_le<std::uint64_t>(in);
    for (auto* col : {&out.stream, &out.k, &out.x, &out.s, &out.u}) {
        col->resize(rows);
        for (auto& v : *col) v = get_le<std::uint64_t>(in);
    }
    out.r.resize(rows);
    for (auto& v : out.r) v = get_le<double>(in);
    return out;
}

} // namespace finmem
