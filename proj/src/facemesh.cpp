#include <microflow/facemesh.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace microflow {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Python's json module writes NaN/Infinity literals; map them to null so they
// surface as non-finite coordinates instead of a generic parse error.
std::string replace_nonfinite_literals(const std::string& text)
{
    std::string out;
    out.reserve(text.size());
    bool in_string = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            out += c;
            if (c == '\\' && i + 1 < text.size())
                out += text[++i];
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
            out += c;
            continue;
        }
        bool replaced = false;
        for (const char* lit : {"-Infinity", "Infinity", "NaN"}) {
            const std::string_view sv(lit);
            if (text.compare(i, sv.size(), sv) == 0) {
                out += "null";
                i += sv.size() - 1;
                replaced = true;
                break;
            }
        }
        if (!replaced)
            out += c;
    }
    return out;
}

json parse_json(const std::string& text)
{
    try {
        return json::parse(replace_nonfinite_literals(text));
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("parse failure: ") + e.what());
    }
}

void throw_if_any(const std::vector<std::string>& problems)
{
    if (problems.empty())
        return;
    std::string msg;
    for (const auto& p : problems) {
        if (!msg.empty())
            msg += "; ";
        msg += p;
    }
    throw ValidationError(msg);
}

std::vector<Point2d> read_points(const json& arr, const std::string& what)
{
    if (!arr.is_array())
        throw ValidationError(what + " must be an array");
    std::vector<Point2d> pts;
    pts.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& p = arr[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            // nlohmann maps NaN literals to null
            if (p.is_array() && p.size() == 2 && (p[0].is_null() || p[1].is_null()))
                throw ValidationError(what + " " + std::to_string(i) + ": non-finite coordinate");
            throw ValidationError(what + " " + std::to_string(i) + " must be [x, y]");
        }
        Point2d q(p[0].get<double>(), p[1].get<double>());
        if (!q.allFinite())
            throw ValidationError(what + " " + std::to_string(i) + ": non-finite coordinate");
        pts.push_back(q);
    }
    return pts;
}

Topology read_triangles(const json& arr)
{
    if (!arr.is_array())
        throw ValidationError("triangles must be an array");
    Topology tris;
    tris.reserve(arr.size());
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const json& t = arr[k];
        if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
            !t[2].is_number_integer())
            throw ValidationError("triangle " + std::to_string(k) + " must be three integer indices");
        tris.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
    }
    return tris;
}

std::vector<std::string> topology_problems(const Topology& triangles, std::size_t landmark_count)
{
    std::vector<std::string> problems;
    for (std::size_t k = 0; k < triangles.size(); ++k) {
        const Triangle& t = triangles[k];
        bool in_range = true;
        for (int idx : t) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= landmark_count) {
                problems.push_back("triangle " + std::to_string(k) + ": index out of range (" +
                                   std::to_string(idx) + ")");
                in_range = false;
            }
        }
        if (in_range && (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]))
            problems.push_back("triangle " + std::to_string(k) + ": repeated vertex index");
    }
    return problems;
}

ordered_json points_json(const std::vector<Point2d>& pts)
{
    ordered_json arr = ordered_json::array();
    for (const auto& p : pts)
        arr.push_back({p.x(), p.y()});
    return arr;
}

ordered_json triangles_json(const Topology& tris)
{
    ordered_json arr = ordered_json::array();
    for (const auto& t : tris)
        arr.push_back({t[0], t[1], t[2]});
    return arr;
}

struct Box {
    double x0, y0, x1, y1;
    bool overlaps(const Box& o) const { return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1; }
};

Box bounds(const std::array<Point2d, 3>& v)
{
    return {std::min({v[0].x(), v[1].x(), v[2].x()}), std::min({v[0].y(), v[1].y(), v[2].y()}),
            std::max({v[0].x(), v[1].x(), v[2].x()}), std::max({v[0].y(), v[1].y(), v[2].y()})};
}

// Interior sample points of a triangle, away from its edges.
std::array<Point2d, 4> interior_samples(const std::array<Point2d, 3>& v)
{
    return {(v[0] + v[1] + v[2]) / 3.0, 0.6 * v[0] + 0.2 * v[1] + 0.2 * v[2],
            0.2 * v[0] + 0.6 * v[1] + 0.2 * v[2], 0.2 * v[0] + 0.2 * v[1] + 0.6 * v[2]};
}

std::vector<std::string> overlap_problems(const std::vector<Point2d>& landmarks, const Topology& tris)
{
    const auto verts = [&](std::size_t k) {
        return std::array<Point2d, 3>{landmarks[tris[k][0]], landmarks[tris[k][1]], landmarks[tris[k][2]]};
    };
    std::vector<Box> boxes;
    boxes.reserve(tris.size());
    for (std::size_t k = 0; k < tris.size(); ++k)
        boxes.push_back(bounds(verts(k)));

    std::vector<std::string> problems;
    for (std::size_t a = 0; a < tris.size(); ++a) {
        const auto va = verts(a);
        for (std::size_t b = a + 1; b < tris.size(); ++b) {
            if (!boxes[a].overlaps(boxes[b]))
                continue;
            const auto vb = verts(b);
            bool overlap = false;
            // negative tolerance: strictly interior
            for (const auto& p : interior_samples(va))
                overlap = overlap || triangle_contains(p, vb[0], vb[1], vb[2], -1e-6);
            for (const auto& p : interior_samples(vb))
                overlap = overlap || triangle_contains(p, va[0], va[1], va[2], -1e-6);
            if (overlap)
                problems.push_back("triangles " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
        }
    }
    return problems;
}

Image<int> rasterize_labels(int width, int height, const std::vector<Point2d>& landmarks, const Topology& tris)
{
    Image<int> labels = Image<int>::Constant(height, width, -1);
    for (std::size_t k = 0; k < tris.size(); ++k) {
        const std::array<Point2d, 3> v{landmarks[tris[k][0]], landmarks[tris[k][1]], landmarks[tris[k][2]]};
        const Box box = bounds(v);
        const int x0 = std::max(0, static_cast<int>(std::floor(box.x0)));
        const int y0 = std::max(0, static_cast<int>(std::floor(box.y0)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(box.x1)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(box.y1)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                if (labels(y, x) >= 0)
                    continue; // a lower index already owns this pixel
                if (triangle_contains(Point2d(x, y), v[0], v[1], v[2]))
                    labels(y, x) = static_cast<int>(k);
            }
    }
    return labels;
}

} // namespace

void FaceMesh::validate() const
{
    std::vector<std::string> problems;
    for (std::size_t j = 0; j < landmarks.size(); ++j)
        if (!landmarks[j].allFinite())
            problems.push_back("landmark " + std::to_string(j) + ": non-finite coordinate");
    auto topo = topology_problems(triangles, landmarks.size());
    problems.insert(problems.end(), topo.begin(), topo.end());
    throw_if_any(problems);
}

std::vector<int> FaceMesh::degenerate_triangles() const
{
    std::vector<int> out;
    for (std::size_t k = 0; k < triangles.size(); ++k) {
        const auto v = vertices(k);
        if (std::abs(signed_area(v[0], v[1], v[2])) < kDegenerateArea)
            out.push_back(static_cast<int>(k));
    }
    return out;
}

CanonicalModel CanonicalModel::build(int canvas_width, int canvas_height, std::vector<Point2d> landmarks,
                                     Topology triangles)
{
    if (canvas_width < 1 || canvas_height < 1)
        throw ValidationError("canvas must be at least 1x1");

    std::vector<std::string> problems;
    for (std::size_t j = 0; j < landmarks.size(); ++j) {
        const Point2d& p = landmarks[j];
        if (!p.allFinite())
            problems.push_back("landmark " + std::to_string(j) + ": non-finite coordinate");
        else if (p.x() < 0 || p.y() < 0 || p.x() >= canvas_width || p.y() >= canvas_height)
            problems.push_back("landmark " + std::to_string(j) + ": landmark out of canvas");
    }
    auto topo = topology_problems(triangles, landmarks.size());
    problems.insert(problems.end(), topo.begin(), topo.end());
    throw_if_any(problems);

    for (std::size_t k = 0; k < triangles.size(); ++k) {
        const Triangle& t = triangles[k];
        if (std::abs(signed_area(landmarks[t[0]], landmarks[t[1]], landmarks[t[2]])) < kDegenerateArea)
            problems.push_back("triangle " + std::to_string(k) + ": degenerate triangle");
    }
    throw_if_any(problems);
    throw_if_any(overlap_problems(landmarks, triangles));

    CanonicalModel m;
    m.width_ = canvas_width;
    m.height_ = canvas_height;
    m.labels_ = rasterize_labels(canvas_width, canvas_height, landmarks, triangles);
    m.landmarks_ = std::move(landmarks);
    m.triangles_ = std::move(triangles);
    return m;
}

const FaceMesh* LandmarkSequence::find(int frame_index) const
{
    for (std::size_t i = 0; i < frame_indices.size(); ++i)
        if (frame_indices[i] == frame_index)
            return &meshes[i];
    return nullptr;
}

CanonicalModel parse_canonical_model(const std::string& json_text)
{
    const json doc = parse_json(json_text);
    if (!doc.is_object() || !doc.contains("canvas") || !doc.contains("landmarks") || !doc.contains("triangles"))
        throw ValidationError("parse failure: expected keys canvas, landmarks, triangles");
    const json& canvas = doc["canvas"];
    if (!canvas.is_array() || canvas.size() != 2 || !canvas[0].is_number_integer() ||
        !canvas[1].is_number_integer())
        throw ValidationError("canvas must be [W, H] integers");
    return CanonicalModel::build(canvas[0].get<int>(), canvas[1].get<int>(),
                                 read_points(doc["landmarks"], "landmark"), read_triangles(doc["triangles"]));
}

CanonicalModel load_canonical_model(const std::filesystem::path& path)
{
    return parse_canonical_model(read_text(path));
}

std::string serialize_canonical_model(const CanonicalModel& model)
{
    ordered_json doc;
    doc["canvas"] = {model.canvas_width(), model.canvas_height()};
    doc["landmarks"] = points_json(model.landmarks());
    doc["triangles"] = triangles_json(model.triangles());
    return doc.dump();
}

LandmarkSequence parse_landmark_sequence(const std::string& json_text, LandmarkLoadOptions options)
{
    const json doc = parse_json(json_text);
    if (!doc.is_object() || !doc.contains("triangles") || !doc.contains("frames") || !doc["frames"].is_array())
        throw ValidationError("parse failure: expected keys triangles, frames");

    LandmarkSequence seq;
    seq.triangles = read_triangles(doc["triangles"]);

    std::map<int, std::vector<Point2d>> by_index;
    for (const json& f : doc["frames"]) {
        if (!f.is_object() || !f.contains("index") || !f["index"].is_number_integer() || !f.contains("landmarks"))
            throw ValidationError("frame entry must have integer index and landmarks");
        const int idx = f["index"].get<int>();
        if (idx < 0)
            throw ValidationError("negative frame index " + std::to_string(idx));
        if (by_index.count(idx))
            throw ValidationError("duplicate frame index " + std::to_string(idx));
        try {
            by_index[idx] = read_points(f["landmarks"], "landmark");
        } catch (const ValidationError& e) {
            throw ValidationError("frame " + std::to_string(idx) + ": " + e.what());
        }
    }
    if (by_index.empty())
        throw ValidationError("no frames");
    if (!by_index.count(0))
        throw ValidationError("missing frame index 0");
    if (!options.allow_gaps) {
        int expected = 0;
        for (const auto& [idx, pts] : by_index) {
            if (idx != expected)
                throw ValidationError("missing frame index " + std::to_string(expected));
            ++expected;
        }
    }

    const std::size_t count = by_index.begin()->second.size();
    for (auto& [idx, pts] : by_index) {
        if (pts.size() != count)
            throw ValidationError("frame " + std::to_string(idx) + ": landmark count varies across frames (" +
                                  std::to_string(pts.size()) + " vs " + std::to_string(count) + ")");
        FaceMesh mesh{std::move(pts), seq.triangles};
        try {
            mesh.validate();
        } catch (const ValidationError& e) {
            throw ValidationError("frame " + std::to_string(idx) + ": " + e.what());
        }
        seq.meshes.push_back(std::move(mesh));
        seq.frame_indices.push_back(idx);
    }
    return seq;
}

LandmarkSequence load_landmark_sequence(const std::filesystem::path& path, LandmarkLoadOptions options)
{
    return parse_landmark_sequence(read_text(path), options);
}

std::string serialize_landmark_sequence(const LandmarkSequence& sequence)
{
    ordered_json doc;
    doc["triangles"] = triangles_json(sequence.triangles);
    ordered_json frames = ordered_json::array();
    for (std::size_t i = 0; i < sequence.meshes.size(); ++i) {
        ordered_json f;
        f["index"] = sequence.frame_indices[i];
        f["landmarks"] = points_json(sequence.meshes[i].landmarks);
        frames.push_back(std::move(f));
    }
    doc["frames"] = std::move(frames);
    return doc.dump();
}

std::optional<int> locate_triangle(const std::vector<Point2d>& landmarks, const Topology& triangles,
                                   const Point2d& p)
{
    for (std::size_t k = 0; k < triangles.size(); ++k) {
        const Triangle& t = triangles[k];
        if (triangle_contains(p, landmarks[t[0]], landmarks[t[1]], landmarks[t[2]]))
            return static_cast<int>(k);
    }
    return std::nullopt;
}

std::optional<int> locate_triangle(const CanonicalModel& model, const Point2d& p)
{
    return locate_triangle(model.landmarks(), model.triangles(), p);
}

std::vector<int> adjacent_triangles(const Topology& triangles, int vertex)
{
    std::vector<int> out;
    for (std::size_t k = 0; k < triangles.size(); ++k) {
        const Triangle& t = triangles[k];
        if (t[0] == vertex || t[1] == vertex || t[2] == vertex)
            out.push_back(static_cast<int>(k));
    }
    return out;
}

void check_same_topology(const CanonicalModel& model, const FaceMesh& mesh)
{
    if (mesh.landmarks.size() != model.landmark_count())
        throw ValidationError("mesh has " + std::to_string(mesh.landmarks.size()) + " landmarks, canonical model has " +
                              std::to_string(model.landmark_count()));
    if (mesh.triangles != model.triangles())
        throw ValidationError("topology mismatch between mesh and canonical model");
}

} // namespace microflow
