#include "featfool/scenekit/scene.hpp"

#include <cmath>

#include "featfool/diffcore/random.hpp"
#include "featfool/errors.hpp"

namespace featfool::scenekit {

namespace {

// Objects keep a one-pixel margin from the canvas edge.
constexpr double kMinCoord = 1.0;
constexpr double kMaxCoord = 30.0;
constexpr double kGap = 2.0;
constexpr double kCentre = 15.5;
constexpr double kCrossJitter = 2.0;
constexpr double kAlongJitter = 1.5;
constexpr double kSingleObjectProbability = 0.2;

constexpr std::array<std::array<float, 3>, 4> kColorRgb{{
    {1.0f, -1.0f, -1.0f},   // red
    {-1.0f, -1.0f, 1.0f},   // blue
    {-1.0f, 1.0f, -1.0f},   // green
    {1.0f, 1.0f, -1.0f},    // yellow
}};

bool inside(const SceneObject& o) {
    return o.cx - o.radius >= kMinCoord && o.cx + o.radius <= kMaxCoord && o.cy - o.radius >= kMinCoord &&
           o.cy + o.radius <= kMaxCoord;
}

bool covers(const SceneObject& o, double px, double py) {
    const double dx = px - o.cx;
    const double dy = py - o.cy;
    const double r = o.radius;
    switch (o.shape) {
        case ShapeKind::circle:
            return dx * dx + dy * dy <= r * r;
        case ShapeKind::square:
            return std::abs(dx) <= 0.8 * r && std::abs(dy) <= 0.8 * r;
        case ShapeKind::triangle: {
            // Apex up, base at cy + 0.8r; half-width grows linearly from the apex.
            const double top = -r;
            const double bottom = 0.8 * r;
            if (dy < top || dy > bottom) return false;
            const double half = (dy - top) / (bottom - top) * 0.95 * r;
            return std::abs(dx) <= half;
        }
        case ShapeKind::cross: {
            const double arm = 0.35 * r;
            return (std::abs(dx) <= arm && std::abs(dy) <= r) || (std::abs(dy) <= arm && std::abs(dx) <= r);
        }
    }
    return false;
}

bool relation_holds(const SceneObject& a, const SceneObject& b, Relation rel) {
    const double dx = a.cx - b.cx;
    const double dy = a.cy - b.cy;
    const bool vertical = std::abs(dy) > 2.0 * std::abs(dx);
    const bool horizontal = std::abs(dx) > 2.0 * std::abs(dy);
    switch (rel) {
        case Relation::above: return vertical && dy < 0;
        case Relation::below: return vertical && dy > 0;
        case Relation::left_of: return horizontal && dx < 0;
        case Relation::right_of: return horizontal && dx > 0;
    }
    return false;
}

}  // namespace

const char* shape_name(ShapeKind s) {
    switch (s) {
        case ShapeKind::circle: return "circle";
        case ShapeKind::square: return "square";
        case ShapeKind::triangle: return "triangle";
        case ShapeKind::cross: return "cross";
    }
    return "?";
}

const char* color_name(ColorKind c) {
    switch (c) {
        case ColorKind::red: return "red";
        case ColorKind::blue: return "blue";
        case ColorKind::green: return "green";
        case ColorKind::yellow: return "yellow";
    }
    return "?";
}

const char* relation_phrase(Relation r) {
    switch (r) {
        case Relation::above: return "above";
        case Relation::below: return "below";
        case Relation::left_of: return "left of";
        case Relation::right_of: return "right of";
    }
    return "?";
}

Relation inverse(Relation r) {
    switch (r) {
        case Relation::above: return Relation::below;
        case Relation::below: return Relation::above;
        case Relation::left_of: return Relation::right_of;
        case Relation::right_of: return Relation::left_of;
    }
    return r;
}

Scene generate_scene(std::uint64_t seed, std::optional<ShapeKind> first_shape) {
    diffcore::Rng rng(diffcore::derive_seed(seed, 0x5ce4e));
    Scene scene;
    SceneObject first;
    first.shape = first_shape ? *first_shape : static_cast<ShapeKind>(rng.below(kShapeCount));
    first.color = static_cast<ColorKind>(rng.below(4));
    first.radius = rng.uniform(6.5, 7.0);

    if (rng.uniform() < kSingleObjectProbability) {
        first.cx = kCentre + rng.uniform(-kCrossJitter, kCrossJitter);
        first.cy = kCentre + rng.uniform(-kCrossJitter, kCrossJitter);
        scene.objects = {first};
        scene.relation = Relation::above;
        return scene;
    }

    SceneObject second;
    second.shape = static_cast<ShapeKind>(rng.below(kShapeCount));
    second.color = static_cast<ColorKind>(rng.below(4));
    second.radius = rng.uniform(4.5, 5.0);
    scene.relation = static_cast<Relation>(rng.below(4));

    // The pair straddles the canvas centre along the relation axis; the
    // midpoint shifts only as far as the margins allow.
    const double along = first.radius + second.radius + kGap + rng.uniform(0.0, 1.5);
    const bool first_leads = scene.relation == Relation::above || scene.relation == Relation::left_of;
    const double lead_r = first_leads ? first.radius : second.radius;
    const double trail_r = first_leads ? second.radius : first.radius;
    const double mid_lo = std::max(kMinCoord + lead_r + along / 2.0, kCentre - kAlongJitter);
    const double mid_hi = std::min(kMaxCoord - trail_r - along / 2.0, kCentre + kAlongJitter);
    const double mid = mid_lo < mid_hi ? rng.uniform(mid_lo, mid_hi) : 0.5 * (mid_lo + mid_hi);
    const double cross = kCentre + rng.uniform(-kCrossJitter, kCrossJitter);
    const double lateral = rng.uniform(-1.0, 1.0);

    const double lead = mid - along / 2.0;
    const double trail = mid + along / 2.0;
    const double a_along = first_leads ? lead : trail;
    const double b_along = first_leads ? trail : lead;
    if (scene.relation == Relation::above || scene.relation == Relation::below) {
        first.cy = a_along;
        second.cy = b_along;
        first.cx = cross;
        second.cx = cross + lateral;
    } else {
        first.cx = a_along;
        second.cx = b_along;
        first.cy = cross;
        second.cy = cross + lateral;
    }
    scene.objects = {first, second};
    return scene;
}

bool scene_is_valid(const Scene& scene) {
    if (scene.objects.empty() || scene.objects.size() > 2) return false;
    for (const auto& o : scene.objects) {
        if (!inside(o)) return false;
    }
    if (scene.objects.size() == 1) return true;
    const auto& a = scene.objects[0];
    const auto& b = scene.objects[1];
    const double dist = std::hypot(a.cx - b.cx, a.cy - b.cy);
    if (dist < a.radius + b.radius) return false;
    if (a.radius <= b.radius) return false;
    return relation_holds(a, b, scene.relation);
}

models::Image render_image(const Scene& scene) {
    std::vector<float> px(3 * kCanvas * kCanvas, -1.0f);
    for (std::size_t y = 0; y < kCanvas; ++y) {
        for (std::size_t x = 0; x < kCanvas; ++x) {
            for (const auto& o : scene.objects) {
                if (!covers(o, static_cast<double>(x), static_cast<double>(y))) continue;
                const auto& rgb = kColorRgb[static_cast<std::size_t>(o.color)];
                for (std::size_t c = 0; c < 3; ++c) px[(c * kCanvas + y) * kCanvas + x] = rgb[c];
            }
        }
    }
    return models::Image(3, kCanvas, kCanvas, std::move(px));
}

std::array<std::string, 2> caption_scene(const Scene& scene) {
    auto phrase = [](const SceneObject& o) { return std::string(color_name(o.color)) + " " + shape_name(o.shape); };
    const auto& a = scene.objects.front();
    if (scene.objects.size() == 1) return {"a " + phrase(a), "one " + phrase(a)};
    const auto& b = scene.objects[1];
    return {"a " + phrase(a) + " " + relation_phrase(scene.relation) + " a " + phrase(b),
            "a " + phrase(b) + " " + relation_phrase(inverse(scene.relation)) + " a " + phrase(a)};
}

std::vector<std::string> caption_words() {
    return {"a",      "one",    "red",      "blue",  "green", "yellow", "circle", "square",
            "triangle", "cross", "above", "below", "left",  "right",  "of"};
}

models::Vocabulary caption_vocabulary() { return models::Vocabulary(caption_words()); }

std::vector<std::string> class_lexicon() { return {"circle", "square", "triangle", "cross"}; }

}  // namespace featfool::scenekit
