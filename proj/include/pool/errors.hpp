#pragma once

#include <stdexcept>
#include <string>

namespace pool {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define POOL_ERROR_TYPE(Name)                        \
  struct Name : Error {                              \
    Name() : Error(#Name) {}                         \
    explicit Name(const std::string& what)           \
        : Error(std::string(#Name) + ": " + what) {} \
  }

// crypto
POOL_ERROR_TYPE(AuthenticationFailure);
POOL_ERROR_TYPE(VerificationError);
POOL_ERROR_TYPE(UnwrapFailure);

// secret sharing
POOL_ERROR_TYPE(InvalidPoolSize);
POOL_ERROR_TYPE(InsufficientShares);
POOL_ERROR_TYPE(VersionMismatch);
POOL_ERROR_TYPE(DuplicateIndex);
POOL_ERROR_TYPE(ReconstructionImpossible);
POOL_ERROR_TYPE(MissingDigest);

// messaging
POOL_ERROR_TYPE(ForgedMessage);
POOL_ERROR_TYPE(CorruptWrappedKey);
POOL_ERROR_TYPE(ParseError);

// chain
POOL_ERROR_TYPE(EmptyMessage);
POOL_ERROR_TYPE(InvalidHeight);
POOL_ERROR_TYPE(ReplayError);

// block store
POOL_ERROR_TYPE(EmptyFile);
POOL_ERROR_TYPE(InsufficientPeers);

// node
POOL_ERROR_TYPE(BlocksUnavailable);
POOL_ERROR_TYPE(InsufficientResponses);
POOL_ERROR_TYPE(NotAuthorized);

// audit / sim
POOL_ERROR_TYPE(EvidenceIncomplete);
POOL_ERROR_TYPE(ConfigError);

#undef POOL_ERROR_TYPE

}  // namespace pool
