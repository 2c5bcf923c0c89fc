#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "splb/geometry.hpp"

namespace splb {

// SPLB geometry file, version 1, little-endian:
//   magic "SPLB", version u32, voxel_size f64, nsites u64, niolets u32;
//   per iolet: kind u8, center 3xf64, normal 3xf64, radius f64;
//   per site: coords 3xi32, collision_type u8, then 18 link tags u8
//   (0=Fluid 1=Wall 2=Inlet 3=Outlet), each tag >= 2 followed by iolet id u16.
// Link order is the LatticeModel direction order.

inline constexpr char kGeometryMagic[4] = {'S', 'P', 'L', 'B'};
inline constexpr uint32_t kGeometryVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "SPLB geometry files are little-endian");

namespace detail {

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw GeometryError("geometry load: truncated file");
    return v;
}

}  // namespace detail

inline void write_domain(const SparseDomain& d, std::ostream& os) {
    using detail::put;
    os.write(kGeometryMagic, 4);
    put(os, kGeometryVersion);
    put(os, d.voxel_size);
    put(os, uint64_t(d.sites.size()));
    put(os, uint32_t(d.iolets.size()));
    for (const Iolet& io : d.iolets) {
        put(os, uint8_t(io.kind));
        for (double c : io.center) put(os, c);
        for (double n : io.normal) put(os, n);
        put(os, io.radius);
    }
    for (const SiteRecord& s : d.sites) {
        for (int32_t c : s.coords) put(os, c);
        put(os, uint8_t(s.type));
        for (const Link& l : s.links) {
            put(os, uint8_t(l.kind));
            if (uint8_t(l.kind) >= 2) put(os, l.iolet);
        }
    }
    if (!os) throw GeometryError("geometry write: stream failure");
}

inline void write_domain(const SparseDomain& d, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw GeometryError("geometry write: cannot open " + path);
    write_domain(d, os);
}

inline SparseDomain read_domain(std::istream& is) {
    using detail::get;
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kGeometryMagic, 4) != 0)
        throw GeometryError("geometry load: not a SPLB file");
    const auto version = get<uint32_t>(is);
    if (version != kGeometryVersion)
        throw GeometryError("geometry load: version mismatch (file has " +
                            std::to_string(version) + ", expected " +
                            std::to_string(kGeometryVersion) + ")");

    SparseDomain d;
    d.voxel_size = get<double>(is);
    const auto nsites = get<uint64_t>(is);
    const auto niolets = get<uint32_t>(is);
    d.iolets.resize(niolets);
    for (Iolet& io : d.iolets) {
        const auto kind = get<uint8_t>(is);
        if (kind > 1) throw GeometryError("geometry load: bad iolet kind");
        io.kind = Iolet::Kind(kind);
        for (double& c : io.center) c = get<double>(is);
        for (double& n : io.normal) n = get<double>(is);
        io.radius = get<double>(is);
    }
    d.sites.resize(nsites);
    for (SiteRecord& s : d.sites) {
        for (int32_t& c : s.coords) c = get<int32_t>(is);
        const auto type = get<uint8_t>(is);
        if (type >= kNumCollisionTypes)
            throw GeometryError("geometry load: bad collision type");
        s.type = CollisionType(type);
        for (Link& l : s.links) {
            const auto tag = get<uint8_t>(is);
            if (tag > 3) throw GeometryError("geometry load: bad link tag");
            l.kind = LinkKind(tag);
            l.iolet = tag >= 2 ? get<uint16_t>(is) : 0;
        }
    }

    // Recompute type ranges from the loaded order, then validate everything.
    uint64_t pos = 0;
    for (int t = 0; t < kNumCollisionTypes; ++t) {
        d.type_ranges[t].begin = pos;
        while (pos < d.sites.size() && int(d.sites[pos].type) == t) ++pos;
        d.type_ranges[t].end = pos;
    }
    validate_domain(d);
    return d;
}

inline SparseDomain read_domain(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw GeometryError("geometry load: cannot open " + path);
    return read_domain(is);
}

}  // namespace splb
