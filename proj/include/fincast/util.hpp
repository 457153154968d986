#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fincast {

// error taxonomy, mapped to CLI exit codes:
//   InputError / SchemaError -> 2 (bad flags, missing files, malformed data)
//   ValidationError          -> 3 (data violates a semantic invariant)
//   anything else            -> 1 (internal)
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaError : InputError {
    using InputError::InputError;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit hash; used for seed-substream derivation and artifact hashing.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t hash_file(const std::string& path);  // throws InputError if unreadable

// Deterministic RNG. All randomness in the library flows from a master seed;
// independent consumers derive named substreams so results do not depend on
// evaluation order or thread schedule.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double log_uniform(double lo, double hi);
    int uniform_int(int lo, int hi);  // inclusive bounds
    double normal();                  // standard normal, Box-Muller

    // child stream keyed on (master seed, tag, index); independent of how much
    // of the parent stream has been consumed
    Rng substream(std::string_view tag, std::uint64_t index = 0) const;

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

// locale-free float formatting: 17 significant digits, round-trips bit-exactly
std::string fmt_double(double v);
double parse_double(std::string_view s);  // throws InputError on garbage
long parse_long(std::string_view s);

std::string read_text_file(const std::string& path);   // throws InputError
void write_text_file(const std::string& path, const std::string& content);

std::vector<std::string> split(std::string_view line, char sep);

}  // namespace fincast
