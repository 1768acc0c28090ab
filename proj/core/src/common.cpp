#include "mcap/common.hpp"

namespace mcap {

std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    out += ")";
    return out;
}

std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

std::vector<std::size_t> row_major_strides(const Shape& s) {
    std::vector<std::size_t> st(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
    return st;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
    const std::size_t nd = std::max(a.size(), b.size());
    Shape out(nd, 1);
    for (std::size_t i = 0; i < nd; ++i) {
        const std::size_t ea = i < a.size() ? a[a.size() - 1 - i] : 1;
        const std::size_t eb = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (ea != eb && ea != 1 && eb != 1) {
            throw ShapeError("cannot broadcast shapes " + shape_str(a) + " and " + shape_str(b));
        }
        out[nd - 1 - i] = std::max(ea, eb);
    }
    return out;
}

} // namespace mcap
