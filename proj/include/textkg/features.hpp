#pragma once

#include <string>

#include "textkg/tensor.hpp"

namespace textkg {

// Feature matrices on disk. Default format is text: one row of
// space-separated floats per line. A binary variant carries a 16-byte header
// (magic "TKGF", then u32 rows, u32 cols, u32 reserved, little-endian) and a
// float32 LE payload; the loader sniffs the magic.
Tensor load_feature_matrix(const std::string& path);
void save_feature_matrix_text(const std::string& path, const Tensor& m);
void save_feature_matrix_binary(const std::string& path, const Tensor& m);

}  // namespace textkg
