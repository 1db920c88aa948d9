#include <json.hpp>

#include "twoball/mesh.hpp"

namespace twoball::mesh {

using json = nlohmann::json;

namespace {

constexpr const char* kSchema = "twoball.domain/1";

Vec2 read_point(const json& j, const char* what)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InvalidDomain(std::string(what) + " must be an array [x, y]");
    return Vec2(j[0].get<double>(), j[1].get<double>());
}

double read_number(const json& j, const char* key)
{
    if (!j.contains(key) || !j[key].is_number())
        throw InvalidDomain(std::string("missing numeric field '") + key + "'");
    return j[key].get<double>();
}

json write_point(const Vec2& x) { return json::array({x.x(), x.y()}); }

Transform read_transform(const json& p)
{
    if (!p.contains("transform"))
        return std::monostate{};
    const json& t = p["transform"];
    if (!t.is_object())
        throw InvalidDomain("transform must be an object");
    if (t.contains("mobius")) {
        if (t.size() != 1)
            throw InvalidDomain("a mobius transform cannot be combined with rigid fields");
        return MobiusTransform{read_point(t["mobius"], "transform.mobius")};
    }
    RigidTransform r;
    for (const auto& [key, value] : t.items()) {
        if (key == "rotation") {
            if (!value.is_number())
                throw InvalidDomain("transform.rotation must be a number");
            r.rotation = value.get<double>();
        } else if (key == "translation") {
            r.translation = read_point(value, "transform.translation");
        } else {
            throw InvalidDomain("unknown transform field '" + key + "'");
        }
    }
    return r;
}

} // namespace

DomainSpec domain_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("domain JSON does not parse: ") + e.what());
    }
    if (!doc.is_object())
        throw InvalidDomain("domain document must be a JSON object");
    if (doc.contains("schema") && doc["schema"] != kSchema)
        throw InvalidDomain("unsupported domain schema");

    DomainSpec spec;
    if (!doc.contains("geometry") || !doc["geometry"].is_string())
        throw InvalidDomain("missing string field 'geometry'");
    try {
        spec.geometry = geom::geometry_from_string(doc["geometry"].get<std::string>());
    } catch (const InvalidArgument& e) {
        throw InvalidDomain(e.detail());
    }
    spec.h = read_number(doc, "h");
    if (!doc.contains("primitives") || !doc["primitives"].is_array())
        throw InvalidDomain("missing array field 'primitives'");

    for (const json& p : doc["primitives"]) {
        if (!p.is_object() || !p.contains("type") || !p["type"].is_string())
            throw InvalidDomain("each primitive needs a string 'type'");
        const std::string type = p["type"];
        Primitive prim;
        if (type == "disk") {
            prim.shape = Disk{read_point(p.value("center", json()), "disk.center"), read_number(p, "radius")};
        } else if (type == "geodesic_disk") {
            prim.shape = GeodesicDisk{read_point(p.value("center", json()), "geodesic_disk.center"),
                                      read_number(p, "radius")};
        } else if (type == "polygon") {
            if (!p.contains("vertices") || !p["vertices"].is_array())
                throw InvalidDomain("polygon needs a 'vertices' array");
            Polygon poly;
            for (const json& v : p["vertices"])
                poly.vertices.push_back(read_point(v, "polygon vertex"));
            prim.shape = std::move(poly);
        } else {
            throw InvalidDomain("unknown primitive type '" + type + "'");
        }
        prim.transform = read_transform(p);
        spec.primitives.push_back(std::move(prim));
    }
    return spec;
}

std::string domain_to_json(const DomainSpec& spec)
{
    json doc;
    doc["schema"] = kSchema;
    doc["geometry"] = geom::to_string(spec.geometry);
    doc["h"] = spec.h;
    doc["primitives"] = json::array();
    for (const Primitive& p : spec.primitives) {
        json j;
        if (const auto* d = std::get_if<Disk>(&p.shape)) {
            j["type"] = "disk";
            j["center"] = write_point(d->center);
            j["radius"] = d->radius;
        } else if (const auto* g = std::get_if<GeodesicDisk>(&p.shape)) {
            j["type"] = "geodesic_disk";
            j["center"] = write_point(g->center);
            j["radius"] = g->radius;
        } else {
            j["type"] = "polygon";
            j["vertices"] = json::array();
            for (const Vec2& v : std::get<Polygon>(p.shape).vertices)
                j["vertices"].push_back(write_point(v));
        }
        if (const auto* r = std::get_if<RigidTransform>(&p.transform))
            j["transform"] = {{"rotation", r->rotation}, {"translation", write_point(r->translation)}};
        else if (const auto* m = std::get_if<MobiusTransform>(&p.transform))
            j["transform"] = {{"mobius", write_point(m->center)}};
        doc["primitives"].push_back(std::move(j));
    }
    return doc.dump(2);
}

} // namespace twoball::mesh
