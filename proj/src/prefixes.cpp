#include "qcqc/prefixes.hpp"

#include <fstream>

#include "qcqc/error.hpp"
#include "qcqc/text.hpp"

namespace qcqc {

const std::vector<std::string>& coco_class_names() {
  static const std::vector<std::string> names{
      "person",        "bicycle",      "car",           "motorcycle",    "airplane",
      "bus",           "train",        "truck",         "boat",          "traffic light",
      "fire hydrant",  "stop sign",    "parking meter", "bench",         "bird",
      "cat",           "dog",          "horse",         "sheep",         "cow",
      "elephant",      "bear",         "zebra",         "giraffe",       "backpack",
      "umbrella",      "handbag",      "tie",           "suitcase",      "frisbee",
      "skis",          "snowboard",    "sports ball",   "kite",          "baseball bat",
      "baseball glove", "skateboard",  "surfboard",     "tennis racket", "bottle",
      "wine glass",    "cup",          "fork",          "knife",         "spoon",
      "bowl",          "banana",       "apple",         "sandwich",      "orange",
      "broccoli",      "carrot",       "hot dog",       "pizza",         "donut",
      "cake",          "chair",        "couch",         "potted plant",  "bed",
      "dining table",  "toilet",       "tv",            "laptop",        "mouse",
      "remote",        "keyboard",     "cell phone",    "microwave",     "oven",
      "toaster",       "sink",         "refrigerator",  "book",          "clock",
      "vase",          "scissors",     "teddy bear",    "hair drier",    "toothbrush"};
  return names;
}

std::vector<std::string> default_prefixes() {
  std::vector<std::string> out;
  out.reserve(coco_class_names().size());
  for (const auto& name : coco_class_names()) out.push_back(with_article(name));
  return out;
}

std::vector<std::string> read_prefix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open prefix file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto prefix = collapse_whitespace(line);
    if (!prefix.empty()) out.push_back(std::move(prefix));
  }
  return out;
}

}  // namespace qcqc
