#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace qcqc {

/// The 80 MS-COCO object class names, in the dataset's category order.
const std::vector<std::string>& coco_class_names();

/// Class names with their indefinite article: "a person", "an airplane".
std::vector<std::string> default_prefixes();

/// One prefix per non-blank line. Throws Io.
std::vector<std::string> read_prefix_file(const std::filesystem::path& path);

}  // namespace qcqc
