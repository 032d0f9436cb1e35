#pragma once

#include <stdexcept>
#include <string>

namespace dncp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DNCP_DEFINE_ERROR(Name)            \
  class Name : public Error {              \
   public:                                 \
    explicit Name(const std::string& what) \
        : Error(#Name ": " + what) {}      \
  }

// Model construction.
DNCP_DEFINE_ERROR(CycleError);
DNCP_DEFINE_ERROR(ShapeError);
DNCP_DEFINE_ERROR(ObservedNotLeaf);

// Numerical evaluation.
DNCP_DEFINE_ERROR(NonFinite);
DNCP_DEFINE_ERROR(UnboundInput);

// Reparameterization.
DNCP_DEFINE_ERROR(ZeroScale);
DNCP_DEFINE_ERROR(UnsupportedFamily);
DNCP_DEFINE_ERROR(NonInvertible);

// Posterior analysis.
DNCP_DEFINE_ERROR(NotNegativeDefinite);
DNCP_DEFINE_ERROR(DomainError);
DNCP_DEFINE_ERROR(SignError);

// Sampling, diagnostics and learning.
DNCP_DEFINE_ERROR(StepUnderflow);
DNCP_DEFINE_ERROR(ConstantSeries);
DNCP_DEFINE_ERROR(EmptyESample);
DNCP_DEFINE_ERROR(PreconditionError);

// Datasets.
DNCP_DEFINE_ERROR(BadMagic);
DNCP_DEFINE_ERROR(TruncatedFile);

#undef DNCP_DEFINE_ERROR

}  // namespace dncp
