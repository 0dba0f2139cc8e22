#include "vemse/model_store.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace vemse {

namespace {

using nlohmann::json;

// End position (one past '}') of the JSON object starting at `start`.
std::size_t json_object_end(const std::vector<unsigned char>& b, std::size_t start) {
    int depth = 0;
    bool in_str = false, esc = false;
    for (std::size_t i = start; i < b.size(); ++i) {
        const char c = char(b[i]);
        if (in_str) {
            if (esc)
                esc = false;
            else if (c == '\\')
                esc = true;
            else if (c == '"')
                in_str = false;
        } else {
            if (c == '"')
                in_str = true;
            else if (c == '{')
                ++depth;
            else if (c == '}') {
                if (--depth == 0) return i + 1;
            }
        }
    }
    return std::size_t(-1);
}

void append_f64(std::vector<unsigned char>& out, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back((u >> (8 * i)) & 0xff);
}

double read_f64(const unsigned char* p) {
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= std::uint64_t(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace

void save_model(const VaeModel& m, const std::string& path) {
    m.check_shapes();

    json header;
    header["F"] = m.F;
    header["L"] = m.L;
    json tensors = json::array();
    std::size_t offset = 0;
    const auto refs = m.params();
    for (const auto& p : refs) {
        json t;
        t["name"] = p.name;
        t["shape"] = {p.tensor->rows(), p.tensor->cols()};
        t["byte_offset"] = offset;
        tensors.push_back(t);
        offset += std::size_t(p.tensor->size()) * 8;
    }
    header["tensors"] = tensors;
    const std::string header_text = header.dump();

    std::vector<unsigned char> bytes;
    bytes.reserve(8 + header_text.size() + offset);
    bytes.insert(bytes.end(), {'V', 'A', 'E', 'W'});
    for (int i = 0; i < 4; ++i) bytes.push_back((kModelFileVersion >> (8 * i)) & 0xff);
    bytes.insert(bytes.end(), header_text.begin(), header_text.end());
    for (const auto& p : refs)
        for (Eigen::Index r = 0; r < p.tensor->rows(); ++r)
            for (Eigen::Index c = 0; c < p.tensor->cols(); ++c)
                append_f64(bytes, (*p.tensor)(r, c));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelIoError(ModelIoError::Code::io, "save_model: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw ModelIoError(ModelIoError::Code::io, "save_model: write failed: " + path);
}

VaeModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelIoError(ModelIoError::Code::io, "load_model: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 8 || std::memcmp(bytes.data(), "VAEW", 4) != 0)
        throw ModelIoError(ModelIoError::Code::bad_magic, "load_model: bad magic");
    std::uint32_t version = 0;
    for (int i = 0; i < 4; ++i) version |= std::uint32_t(bytes[4 + std::size_t(i)]) << (8 * i);
    if (version != kModelFileVersion)
        throw ModelIoError(ModelIoError::Code::bad_version,
                           "load_model: unsupported version " + std::to_string(version));

    const std::size_t header_end = json_object_end(bytes, 8);
    if (header_end == std::size_t(-1))
        throw ModelIoError(ModelIoError::Code::bad_header, "load_model: unterminated header");
    json header;
    try {
        header = json::parse(bytes.begin() + 8, bytes.begin() + std::ptrdiff_t(header_end));
    } catch (const json::exception& e) {
        throw ModelIoError(ModelIoError::Code::bad_header,
                           std::string("load_model: header parse error: ") + e.what());
    }

    int F = 0, L = 0;
    json tensors;
    try {
        F = header.at("F").get<int>();
        L = header.at("L").get<int>();
        tensors = header.at("tensors");
    } catch (const json::exception& e) {
        throw ModelIoError(ModelIoError::Code::bad_header,
                           std::string("load_model: header fields: ") + e.what());
    }
    if (F < 1 || L < 1)
        throw ModelIoError(ModelIoError::Code::bad_header, "load_model: bad F or L");

    VaeModel m = VaeModel::zeros(F, L);
    auto refs = m.params();
    if (!tensors.is_array() || tensors.size() != refs.size())
        throw ModelIoError(ModelIoError::Code::bad_shape,
                           "load_model: expected " + std::to_string(refs.size()) + " tensors");

    const std::size_t payload_start = header_end;
    const std::size_t payload_len = bytes.size() - payload_start;
    std::size_t expect_offset = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const json& t = tensors[i];
        std::string name;
        std::size_t r = 0, c = 0, off = 0;
        try {
            name = t.at("name").get<std::string>();
            r = t.at("shape").at(0).get<std::size_t>();
            c = t.at("shape").at(1).get<std::size_t>();
            off = t.at("byte_offset").get<std::size_t>();
        } catch (const json::exception& e) {
            throw ModelIoError(ModelIoError::Code::bad_header,
                               std::string("load_model: tensor entry: ") + e.what());
        }
        if (name != refs[i].name)
            throw ModelIoError(ModelIoError::Code::bad_shape,
                               "load_model: unexpected tensor name " + name);
        if (Eigen::Index(r) != refs[i].tensor->rows() || Eigen::Index(c) != refs[i].tensor->cols())
            throw ModelIoError(ModelIoError::Code::bad_shape,
                               "load_model: tensor " + name + " shape inconsistent with F/L");
        if (off != expect_offset)
            throw ModelIoError(ModelIoError::Code::bad_header,
                               "load_model: tensor " + name + " byte_offset out of order");
        const std::size_t nbytes = r * c * 8;
        if (off + nbytes > payload_len)
            throw ModelIoError(ModelIoError::Code::bad_length,
                               "load_model: truncated payload: tensor " + name + " needs " +
                                   std::to_string(off + nbytes) + " bytes, payload has " +
                                   std::to_string(payload_len));
        const unsigned char* base = bytes.data() + payload_start + off;
        for (std::size_t rr = 0; rr < r; ++rr)
            for (std::size_t cc = 0; cc < c; ++cc)
                (*refs[i].tensor)(Eigen::Index(rr), Eigen::Index(cc)) =
                    read_f64(base + (rr * c + cc) * 8);
        expect_offset += nbytes;
    }
    if (payload_len != expect_offset)
        throw ModelIoError(ModelIoError::Code::bad_length,
                           "load_model: payload length " + std::to_string(payload_len) +
                               " does not match tensor table total " +
                               std::to_string(expect_offset));
    if (!m.all_finite())
        throw ModelIoError(ModelIoError::Code::non_finite, "load_model: non-finite weights");
    return m;
}

}  // namespace vemse
