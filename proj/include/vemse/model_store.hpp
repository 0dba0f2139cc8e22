#pragma once

#include <stdexcept>
#include <string>

#include "vemse/vae.hpp"

namespace vemse {

// On-disk model layout: 4-byte magic "VAEW", little-endian u32 version,
// a compact UTF-8 JSON header {"F":..,"L":..,"tensors":[{name,shape,
// byte_offset},..]} (byte offsets relative to the payload start), then the
// payload of little-endian 64-bit floats in row-major tensor order.
constexpr std::uint32_t kModelFileVersion = 1;

class ModelIoError : public std::runtime_error {
public:
    enum class Code { io, bad_magic, bad_version, bad_header, bad_length, bad_shape, non_finite };

    ModelIoError(Code c, const std::string& what) : std::runtime_error(what), code(c) {}

    Code code;
};

void save_model(const VaeModel& m, const std::string& path);

// Fully validated on load; every failure mode raises a distinct
// ModelIoError::Code.
VaeModel load_model(const std::string& path);

}  // namespace vemse
