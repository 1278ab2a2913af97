#pragma once

#include <string>

#include "seqgan/param_store.hpp"

namespace seqgan {

// Versioned text checkpoint. Header line `seqgan-ckpt v1`, then one line per
// parameter: `name dims v0 v1 ...` where dims is `R` for vectors and `RxC`
// for matrices. Floats are written with enough digits for a bit-exact
// round-trip.
void save_checkpoint(const ParamStore& params, const std::string& path);

// Loads values into an existing store. Every parameter in the store must be
// present in the file with a matching shape; unknown names or malformed
// content raise DataError.
void load_checkpoint(ParamStore& params, const std::string& path);

}  // namespace seqgan
