#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "featfool/models/types.hpp"

namespace featfool::scenekit {

enum class ShapeKind { circle, square, triangle, cross };
enum class ColorKind { red, blue, green, yellow };
// Placement of the first object relative to the second.
enum class Relation { above, below, left_of, right_of };

inline constexpr std::size_t kShapeCount = 4;
inline constexpr std::size_t kCanvas = 32;

const char* shape_name(ShapeKind s);
const char* color_name(ColorKind c);
// "above", "below", "left of", "right of"
const char* relation_phrase(Relation r);
Relation inverse(Relation r);

struct SceneObject {
    ShapeKind shape = ShapeKind::circle;
    ColorKind color = ColorKind::red;
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;

    bool operator==(const SceneObject&) const = default;
};

struct Scene {
    std::vector<SceneObject> objects;  // one or two; the first is the larger
    Relation relation = Relation::above;

    std::size_t class_label() const { return static_cast<std::size_t>(objects.front().shape); }
    bool operator==(const Scene&) const = default;
};

// Deterministic per seed. When `first_shape` is given it fixes the class.
Scene generate_scene(std::uint64_t seed, std::optional<ShapeKind> first_shape = std::nullopt);

// True when the scene satisfies the placement rules (count, containment,
// separation, relation geometry).
bool scene_is_valid(const Scene& scene);

// 3 x 32 x 32, background -1, objects at their color's signed RGB triple.
models::Image render_image(const Scene& scene);

// Two paraphrases; the first is the canonical training caption.
std::array<std::string, 2> caption_scene(const Scene& scene);

// Every word the caption templates can produce, in vocabulary order.
std::vector<std::string> caption_words();
models::Vocabulary caption_vocabulary();

// Class id -> class word used for keyword selection.
std::vector<std::string> class_lexicon();

}  // namespace featfool::scenekit
