#pragma once

// Content addressing for context recipes.
//
// A recipe's identity is the SHA-256 of a canonical byte encoding, so two
// recipes with the same logical content always collide to one id regardless
// of how the structures were built.  The encoding is versioned and
// documented in PROTOCOL.md; changing it changes every recipe id.

#include <cstdint>
#include <vector>

#include "gleaner/types.hpp"

namespace gleaner {

// Canonical encoding rules (v1):
//   preamble  "gleaner.recipe.v1\n"
//   elements  function_code, dependency_package, context_code, in that
//             order, each as [u8 kind][u64 declared_size][u64 nbytes][bytes]
//   inputs    [u32 count] then each input sorted by name (byte order,
//             stable) as [u8 3][u16 name_len][name][u64 declared_size]
//             [u64 nbytes][bytes]
// All integers big-endian.  nbytes is the literal payload carried; a
// size-only blob encodes nbytes=0 with declared_size set, and is therefore
// distinct from a blob whose bytes happen to be present.
std::vector<std::uint8_t> canonical_recipe_encoding(const ContextRecipe& recipe);

RecipeId compute_recipe_id(const ContextRecipe& recipe);

}  // namespace gleaner
