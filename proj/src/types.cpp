#include <sgl/errors.hpp>
#include <sgl/types.hpp>

#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace sgl {

void Dataset::validate(Task task) const
{
    if (X.rows() < 2) {
        throw InvalidInput("dataset needs at least 2 samples, got " + std::to_string(X.rows()));
    }
    if (X.cols() < 1) {
        throw InvalidInput("dataset needs at least 1 variable");
    }
    if (y.size() != X.rows()) {
        throw InvalidInput("response length " + std::to_string(y.size()) + " does not match "
                           + std::to_string(X.rows()) + " samples");
    }
    if (!names.empty() && static_cast<Index>(names.size()) != X.cols()) {
        throw InvalidInput("variable name count does not match column count");
    }
    for (Index i = 0; i < X.rows(); ++i) {
        for (Index j = 0; j < X.cols(); ++j) {
            if (!std::isfinite(X(i, j))) {
                throw InvalidInput("non-finite sample value at (" + std::to_string(i) + ", "
                                   + std::to_string(j) + ")");
            }
        }
        if (!std::isfinite(y(i))) {
            throw InvalidInput("non-finite response at sample " + std::to_string(i));
        }
    }
    if (task == Task::Classification) {
        bool pos = false, neg = false;
        for (Index i = 0; i < y.size(); ++i) {
            if (y(i) == 1.0) {
                pos = true;
            } else if (y(i) == -1.0) {
                neg = true;
            } else {
                throw InvalidInput("label at sample " + std::to_string(i)
                                   + " is not in {-1, +1}");
            }
        }
        if (!pos || !neg) {
            throw InvalidInput("classification needs both classes present");
        }
    }
}

namespace {

void fnv_mix(std::uint64_t& h, const void* bytes, std::size_t len)
{
    const auto* b = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
    }
}

void fnv_mix_double(std::uint64_t& h, double v)
{
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    // fixed little-endian byte order
    for (int k = 0; k < 8; ++k) {
        unsigned char c = static_cast<unsigned char>(bits >> (8 * k));
        fnv_mix(h, &c, 1);
    }
}

} // namespace

std::uint64_t fingerprint(const Dataset& data)
{
    std::uint64_t h = 14695981039346656037ULL;
    fnv_mix_double(h, static_cast<double>(data.n()));
    fnv_mix_double(h, static_cast<double>(data.p()));
    for (Index i = 0; i < data.X.rows(); ++i) {
        for (Index j = 0; j < data.X.cols(); ++j) {
            fnv_mix_double(h, data.X(i, j));
        }
    }
    for (Index i = 0; i < data.y.size(); ++i) {
        fnv_mix_double(h, data.y(i));
    }
    return h;
}

std::string to_hex(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

} // namespace sgl
