// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace boat {

using Rng = std::mt19937_64;

// splitmix64 step, used to derive independent rng streams from a master seed
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct BoatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define BOAT_DEFINE_ERROR(Name)                  \
    struct Name : BoatError {                    \
        using BoatError::BoatError;              \
    }

BOAT_DEFINE_ERROR(InvalidResidue);
BOAT_DEFINE_ERROR(LengthMismatch);
BOAT_DEFINE_ERROR(RepairFailure);
BOAT_DEFINE_ERROR(SpaceTooSmall);
BOAT_DEFINE_ERROR(SpaceTooLarge);
BOAT_DEFINE_ERROR(SequenceTooShort);
BOAT_DEFINE_ERROR(DimensionMismatch);
BOAT_DEFINE_ERROR(ZeroVectors);
BOAT_DEFINE_ERROR(DecompositionFailure);
BOAT_DEFINE_ERROR(SingularKernel);
BOAT_DEFINE_ERROR(WrongObjectiveCount);
BOAT_DEFINE_ERROR(UnsupportedDimension);
BOAT_DEFINE_ERROR(BudgetExhausted);
BOAT_DEFINE_ERROR(OracleFailure);
BOAT_DEFINE_ERROR(SpawnFailure);
BOAT_DEFINE_ERROR(HandshakeTimeout);
BOAT_DEFINE_ERROR(ProtocolViolation);
BOAT_DEFINE_ERROR(MissingWeight);
BOAT_DEFINE_ERROR(ExternalOracleRefused);
BOAT_DEFINE_ERROR(ConfigError);

#undef BOAT_DEFINE_ERROR

// Writes `content` to `path` via a temporary file and rename, so readers
// never observe a partially written file.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace boat
