#include "parkloc/annotations.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace parkloc {

using nlohmann::json;

double round_sig9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::strtod(buf, nullptr);
}

// --- XML subset scanner ------------------------------------------------------

namespace {

struct XmlAttr {
    std::string name;
    std::string value;
};

struct XmlTag {
    std::string name;
    std::vector<XmlAttr> attrs;
    bool closing = false;
    bool self_closing = false;
    std::size_t line = 0;

    const std::string* attr(std::string_view key) const {
        for (const XmlAttr& a : attrs) {
            if (a.name == key) return &a.value;
        }
        return nullptr;
    }
};

bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' ||
           c == '.';
}

// Pull scanner over the element structure. Text content, comments, prolog
// and doctype are skipped; only tags come back.
class XmlScanner {
public:
    explicit XmlScanner(std::string_view text) : text_(text) {}

    std::optional<XmlTag> next() {
        while (pos_ < text_.size()) {
            if (text_[pos_] != '<') {
                advance();
                continue;
            }
            if (starts_with("<?")) {
                skip_until("?>");
                continue;
            }
            if (starts_with("<!--")) {
                skip_until("-->");
                continue;
            }
            if (starts_with("<!")) {
                skip_until(">");
                continue;
            }
            return read_tag();
        }
        return std::nullopt;
    }

private:
    void advance() {
        if (text_[pos_] == '\n') ++line_;
        ++pos_;
    }

    bool starts_with(std::string_view prefix) const {
        return text_.substr(pos_, prefix.size()) == prefix;
    }

    void skip_until(std::string_view terminator) {
        const std::size_t found = text_.find(terminator, pos_);
        if (found == std::string_view::npos) {
            throw ParseError("unterminated markup, expected '" + std::string(terminator) + "'",
                             line_);
        }
        while (pos_ < found + terminator.size()) advance();
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            advance();
        }
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void expect(char c) {
        if (peek() != c) {
            throw ParseError(std::string("expected '") + c + "' in tag", line_);
        }
        advance();
    }

    std::string read_name() {
        std::string name;
        while (pos_ < text_.size() && name_char(text_[pos_])) {
            name.push_back(text_[pos_]);
            advance();
        }
        if (name.empty()) throw ParseError("expected element or attribute name", line_);
        return name;
    }

    std::string read_attr_value() {
        const char quote = peek();
        if (quote != '"' && quote != '\'') {
            throw ParseError("attribute value must be quoted", line_);
        }
        advance();
        std::string raw;
        while (pos_ < text_.size() && text_[pos_] != quote) {
            raw.push_back(text_[pos_]);
            advance();
        }
        expect(quote);
        return decode_entities(raw);
    }

    std::string decode_entities(const std::string& raw) const {
        if (raw.find('&') == std::string::npos) return raw;
        static const std::pair<std::string_view, char> table[] = {
            {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
        std::string out;
        for (std::size_t i = 0; i < raw.size();) {
            bool replaced = false;
            if (raw[i] == '&') {
                for (const auto& [entity, ch] : table) {
                    if (std::string_view(raw).substr(i, entity.size()) == entity) {
                        out.push_back(ch);
                        i += entity.size();
                        replaced = true;
                        break;
                    }
                }
            }
            if (!replaced) out.push_back(raw[i++]);
        }
        return out;
    }

    XmlTag read_tag() {
        XmlTag tag;
        tag.line = line_;
        expect('<');
        if (peek() == '/') {
            advance();
            tag.closing = true;
            tag.name = read_name();
            skip_ws();
            expect('>');
            return tag;
        }
        tag.name = read_name();
        for (;;) {
            skip_ws();
            const char c = peek();
            if (c == '>') {
                advance();
                return tag;
            }
            if (c == '/') {
                advance();
                expect('>');
                tag.self_closing = true;
                return tag;
            }
            if (c == '\0') throw ParseError("unterminated tag '" + tag.name + "'", tag.line);
            const std::size_t attr_line = line_;
            XmlAttr attr;
            attr.name = read_name();
            skip_ws();
            if (peek() != '=') {
                throw ParseError("attribute '" + attr.name + "' is missing '='", attr_line);
            }
            advance();
            skip_ws();
            attr.value = read_attr_value();
            tag.attrs.push_back(std::move(attr));
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

double parse_coord(const std::string& text, std::size_t line, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw ParseError(std::string("bad ") + what + " coordinate '" + text + "'", line);
    }
    return v;
}

// Consumes the rest of the current element (start tag already read).
void skip_subtree(XmlScanner& scanner, const XmlTag& open) {
    if (open.self_closing) return;
    int depth = 1;
    while (depth > 0) {
        const auto tag = scanner.next();
        if (!tag) throw ParseError("unexpected end of document inside '" + open.name + "'");
        if (tag->closing) {
            --depth;
        } else if (!tag->self_closing) {
            ++depth;
        }
    }
}

struct RawSpace {
    std::string id;
    std::optional<bool> occupied;
    std::vector<Point> points;
    std::size_t line = 0;
};

RawSpace read_space(XmlScanner& scanner, const XmlTag& space_tag, std::size_t ordinal) {
    RawSpace space;
    space.line = space_tag.line;
    if (const std::string* id = space_tag.attr("id")) {
        space.id = *id;
    } else {
        space.id = "space#" + std::to_string(ordinal);
    }
    if (const std::string* occ = space_tag.attr("occupied")) {
        if (*occ == "1") {
            space.occupied = true;
        } else if (*occ == "0") {
            space.occupied = false;
        } else {
            throw ParseError("occupied attribute must be '0' or '1'", space_tag.line);
        }
    }
    if (space_tag.self_closing) return space;

    int depth = 1;
    bool in_contour = false;
    while (depth > 0) {
        const auto tag = scanner.next();
        if (!tag) throw ParseError("unexpected end of document inside space", space_tag.line);
        if (tag->closing) {
            if (depth == 2 && in_contour && tag->name == "contour") in_contour = false;
            --depth;
            continue;
        }
        if (depth == 1 && tag->name == "contour" && !tag->self_closing) {
            in_contour = true;
            ++depth;
            continue;
        }
        if (in_contour && depth == 2 && tag->name == "point") {
            const std::string* x = tag->attr("x");
            const std::string* y = tag->attr("y");
            if (!x || !y) throw ParseError("point element needs x and y attributes", tag->line);
            space.points.push_back(
                {parse_coord(*x, tag->line, "x"), parse_coord(*y, tag->line, "y")});
            if (!tag->self_closing) skip_subtree(scanner, *tag);
            continue;
        }
        // rotatedRect and anything else: skip.
        skip_subtree(scanner, *tag);
    }
    return space;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string format_coord(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

PklotDocument parse_pklot_xml(std::string_view text) {
    XmlScanner scanner(text);
    const auto root = scanner.next();
    if (!root || root->closing) throw ParseError("document has no root element");
    if (root->name != "parking") {
        throw ParseError("expected 'parking' root element, found '" + root->name + "'",
                         root->line);
    }

    PklotDocument doc;
    std::set<std::string> seen_ids;
    std::size_t ordinal = 0;
    if (!root->self_closing) {
        for (;;) {
            const auto tag = scanner.next();
            if (!tag) throw ParseError("unexpected end of document, 'parking' not closed");
            if (tag->closing) {
                if (tag->name != "parking") {
                    throw ParseError("mismatched closing tag '" + tag->name + "'", tag->line);
                }
                break;
            }
            if (tag->name != "space") {
                skip_subtree(scanner, *tag);
                continue;
            }
            ++ordinal;
            RawSpace raw = read_space(scanner, *tag, ordinal);
            if (!seen_ids.insert(raw.id).second) {
                doc.errors.push_back({raw.id, "duplicate space id"});
                continue;
            }
            if (raw.points.size() != 4) {
                doc.errors.push_back(
                    {raw.id, "contour has " + std::to_string(raw.points.size()) +
                                 " points, expected 4"});
                continue;
            }
            try {
                Quad quad(raw.points[0], raw.points[1], raw.points[2], raw.points[3]);
                doc.spaces.push_back({raw.id, quad, raw.occupied});
            } catch (const ValidationError& e) {
                doc.errors.push_back({raw.id, e.what()});
            }
        }
    }
    return doc;
}

std::string write_pklot_xml(const std::vector<PklotSpace>& spaces,
                            const std::string& parking_id) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<parking id=\"" << xml_escape(parking_id) << "\">\n";
    for (const PklotSpace& s : spaces) {
        out << "  <space id=\"" << xml_escape(s.id) << "\"";
        if (s.occupied.has_value()) {
            out << " occupied=\"" << (*s.occupied ? 1 : 0) << "\"";
        }
        out << ">\n    <contour>\n";
        for (const Point& p : s.quad.corners()) {
            out << "      <point x=\"" << format_coord(p.x) << "\" y=\"" << format_coord(p.y)
                << "\"/>\n";
        }
        out << "    </contour>\n  </space>\n";
    }
    out << "</parking>\n";
    return out.str();
}

// --- Detection stream --------------------------------------------------------

namespace {

double require_number(const json& obj, const char* field, std::size_t line) {
    const auto it = obj.find(field);
    if (it == obj.end() || !it->is_number()) {
        throw ParseError(std::string("missing or non-numeric field '") + field + "'", line);
    }
    return it->get<double>();
}

}  // namespace

std::vector<FrameDetections> read_detection_stream(std::istream& in) {
    std::vector<FrameDetections> frames;
    std::unordered_map<std::string, std::int64_t> last_frame;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed detection record: ") + e.what(), lineno);
        }
        if (!rec.is_object()) throw ParseError("detection record must be an object", lineno);

        FrameDetections frame;
        const auto cam = rec.find("camera_id");
        if (cam == rec.end() || !cam->is_string()) {
            throw ParseError("missing or non-string field 'camera_id'", lineno);
        }
        frame.camera_id = cam->get<std::string>();
        const auto fi = rec.find("frame_index");
        if (fi == rec.end() || !fi->is_number_integer()) {
            throw ParseError("missing or non-integer field 'frame_index'", lineno);
        }
        frame.frame_index = fi->get<std::int64_t>();
        if (frame.frame_index < 0) throw ParseError("frame_index must be >= 0", lineno);
        if (const auto ts = rec.find("timestamp"); ts != rec.end() && !ts->is_null()) {
            if (!ts->is_number()) throw ParseError("field 'timestamp' must be a number", lineno);
            frame.timestamp = ts->get<double>();
        }
        const auto boxes = rec.find("boxes");
        if (boxes == rec.end() || !boxes->is_array()) {
            throw ParseError("missing or non-array field 'boxes'", lineno);
        }
        std::size_t box_index = 0;
        for (const json& b : *boxes) {
            if (!b.is_object()) throw ParseError("box entries must be objects", lineno);
            ScoredBox sb;
            sb.box.x = require_number(b, "x", lineno);
            sb.box.y = require_number(b, "y", lineno);
            sb.box.w = require_number(b, "w", lineno);
            sb.box.h = require_number(b, "h", lineno);
            sb.score = require_number(b, "score", lineno);
            if (!bbox_valid(sb.box)) {
                throw ParseError("box " + std::to_string(box_index) +
                                     ": fields w and h must be finite and > 0",
                                 lineno);
            }
            if (!(sb.score >= 0.0 && sb.score <= 1.0)) {
                throw ParseError("box " + std::to_string(box_index) + ": score must be in [0,1]",
                                 lineno);
            }
            frame.boxes.push_back(sb);
            ++box_index;
        }

        const auto [it, inserted] = last_frame.try_emplace(frame.camera_id, frame.frame_index);
        if (!inserted) {
            if (frame.frame_index <= it->second) {
                throw ParseError("frame_index " + std::to_string(frame.frame_index) +
                                     " not increasing for camera '" + frame.camera_id + "'",
                                 lineno);
            }
            it->second = frame.frame_index;
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

std::vector<FrameDetections> read_detection_stream_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open detection stream '" + path.string() + "'");
    return read_detection_stream(in);
}

void write_detection_stream(const std::vector<FrameDetections>& frames, std::ostream& out) {
    for (const FrameDetections& frame : frames) {
        json rec;
        rec["camera_id"] = frame.camera_id;
        rec["frame_index"] = frame.frame_index;
        if (frame.timestamp) rec["timestamp"] = round_sig9(*frame.timestamp);
        json boxes = json::array();
        for (const ScoredBox& sb : frame.boxes) {
            boxes.push_back({{"x", round_sig9(sb.box.x)},
                             {"y", round_sig9(sb.box.y)},
                             {"w", round_sig9(sb.box.w)},
                             {"h", round_sig9(sb.box.h)},
                             {"score", round_sig9(sb.score)}});
        }
        rec["boxes"] = std::move(boxes);
        out << rec.dump() << '\n';
    }
}

// --- Spot metadata -----------------------------------------------------------

namespace {

constexpr int kMetadataVersion = 1;

const std::set<std::string>& spot_fields() {
    static const std::set<std::string> fields = {
        "camera_id", "x",     "y",
        "w",         "h",     "angle",
        "width_scaling",      "height_scaling",
        "support"};
    return fields;
}

}  // namespace

void write_spot_metadata(const std::vector<SpotRecord>& spots, std::ostream& out) {
    json doc;
    doc["format_version"] = kMetadataVersion;
    json arr = json::array();
    for (const SpotRecord& s : spots) {
        arr.push_back({{"camera_id", s.camera_id},
                       {"x", round_sig9(s.bbox.x)},
                       {"y", round_sig9(s.bbox.y)},
                       {"w", round_sig9(s.bbox.w)},
                       {"h", round_sig9(s.bbox.h)},
                       {"angle", round_sig9(s.triplet.angle_deg)},
                       {"width_scaling", round_sig9(s.triplet.width_scaling)},
                       {"height_scaling", round_sig9(s.triplet.height_scaling)},
                       {"support", s.support}});
    }
    doc["spots"] = std::move(arr);
    out << doc.dump(2) << '\n';
}

void write_spot_metadata_file(const std::vector<SpotRecord>& spots,
                              const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
    write_spot_metadata(spots, out);
}

std::vector<SpotRecord> read_spot_metadata(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed spot metadata: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("spot metadata must be a JSON object");
    const auto ver = doc.find("format_version");
    if (ver == doc.end()) throw ParseError("spot metadata is missing 'format_version'");
    if (!ver->is_number_integer() || ver->get<int>() != kMetadataVersion) {
        throw ParseError("unsupported spot metadata format_version (expected 1)");
    }
    const auto spots_it = doc.find("spots");
    if (spots_it == doc.end() || !spots_it->is_array()) {
        throw ParseError("spot metadata is missing the 'spots' array");
    }

    std::vector<SpotRecord> spots;
    std::size_t index = 0;
    for (const json& rec : *spots_it) {
        const std::string where = "spot " + std::to_string(index);
        if (!rec.is_object()) throw ParseError(where + ": record must be an object");
        for (const auto& [key, value] : rec.items()) {
            (void)value;
            if (!spot_fields().contains(key)) {
                throw ParseError(where + ": unknown field '" + key + "'");
            }
        }
        for (const std::string& field : spot_fields()) {
            if (!rec.contains(field)) throw ParseError(where + ": missing field '" + field + "'");
        }
        SpotRecord s;
        if (!rec["camera_id"].is_string()) {
            throw ParseError(where + ": field 'camera_id' must be a string");
        }
        s.camera_id = rec["camera_id"].get<std::string>();
        auto num = [&](const char* field) {
            if (!rec[field].is_number()) {
                throw ParseError(where + ": field '" + field + "' must be a number");
            }
            return rec[field].get<double>();
        };
        s.bbox = {num("x"), num("y"), num("w"), num("h")};
        s.triplet = {num("angle"), num("width_scaling"), num("height_scaling")};
        if (!rec["support"].is_number_integer()) {
            throw ParseError(where + ": field 'support' must be an integer");
        }
        s.support = rec["support"].get<std::int64_t>();
        try {
            require_valid(s.bbox);
            require_valid(s.triplet);
        } catch (const ValidationError& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (s.support < 0) throw ParseError(where + ": support must be >= 0");
        spots.push_back(std::move(s));
        ++index;
    }
    return spots;
}

std::vector<SpotRecord> read_spot_metadata_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open spot metadata '" + path.string() + "'");
    return read_spot_metadata(in);
}

// --- Frame manifest ----------------------------------------------------------

std::vector<ManifestEntry> parse_frame_manifest(std::istream& in,
                                                const std::filesystem::path& base_dir) {
    std::vector<ManifestEntry> entries;
    std::set<std::int64_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::size_t split = line.find_first_of(" \t", start);
        if (split == std::string::npos) {
            throw ParseError("manifest line needs 'frame_index path'", lineno);
        }
        char* end = nullptr;
        const std::string index_text = line.substr(start, split - start);
        const long long frame = std::strtoll(index_text.c_str(), &end, 10);
        if (end == index_text.c_str() || *end != '\0' || frame < 0) {
            throw ParseError("bad frame index '" + index_text + "'", lineno);
        }
        if (!seen.insert(frame).second) {
            throw ParseError("duplicate frame index " + std::to_string(frame), lineno);
        }
        std::size_t path_start = line.find_first_not_of(" \t", split);
        if (path_start == std::string::npos) {
            throw ParseError("manifest line is missing the annotation path", lineno);
        }
        std::size_t path_end = line.find_last_not_of(" \t\r");
        std::filesystem::path p = line.substr(path_start, path_end - path_start + 1);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        entries.push_back({frame, std::move(p)});
    }
    return entries;
}

std::vector<ManifestEntry> read_frame_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest '" + path.string() + "'");
    return parse_frame_manifest(in, path.parent_path());
}

void write_frame_manifest(const std::vector<ManifestEntry>& entries, std::ostream& out) {
    for (const ManifestEntry& e : entries) {
        out << e.frame_index << '\t' << e.annotation_path.generic_string() << '\n';
    }
}

std::vector<GroundTruthSpot> load_ground_truth(const std::filesystem::path& manifest_path) {
    const auto entries = read_frame_manifest(manifest_path);
    std::vector<GroundTruthSpot> spots;
    std::unordered_map<std::string, std::size_t> by_id;
    for (const ManifestEntry& entry : entries) {
        std::ifstream in(entry.annotation_path);
        if (!in) {
            throw ParseError("cannot open annotation '" + entry.annotation_path.string() + "'");
        }
        std::ostringstream text;
        text << in.rdbuf();
        PklotDocument doc;
        try {
            doc = parse_pklot_xml(text.str());
        } catch (const ParseError& e) {
            throw ParseError(entry.annotation_path.string() + ": " + e.what());
        }
        if (!doc.errors.empty()) {
            std::string msg = entry.annotation_path.string() + ": ";
            for (std::size_t i = 0; i < doc.errors.size(); ++i) {
                if (i) msg += "; ";
                msg += "space '" + doc.errors[i].spot_id + "': " + doc.errors[i].message;
            }
            throw ParseError(msg);
        }
        for (const PklotSpace& space : doc.spaces) {
            const auto [it, inserted] = by_id.try_emplace(space.id, spots.size());
            if (inserted) {
                spots.push_back({space.id, space.quad, {}});
            }
            if (space.occupied.has_value()) {
                spots[it->second].occupied_by_frame[entry.frame_index] = *space.occupied;
            }
        }
    }
    return spots;
}

std::vector<GroundTruthSpot> load_ground_truth_any(const std::filesystem::path& path) {
    if (path.extension() == ".xml") {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open annotation '" + path.string() + "'");
        std::ostringstream text;
        text << in.rdbuf();
        PklotDocument doc;
        try {
            doc = parse_pklot_xml(text.str());
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        if (!doc.errors.empty()) {
            throw ParseError(path.string() + ": space '" + doc.errors.front().spot_id +
                             "': " + doc.errors.front().message);
        }
        std::vector<GroundTruthSpot> spots;
        for (const PklotSpace& space : doc.spaces) {
            GroundTruthSpot gt{space.id, space.quad, {}};
            if (space.occupied.has_value()) gt.occupied_by_frame[0] = *space.occupied;
            spots.push_back(std::move(gt));
        }
        return spots;
    }
    return load_ground_truth(path);
}

}  // namespace parkloc
