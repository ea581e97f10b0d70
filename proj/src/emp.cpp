#include "cascade_emp/emp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "cascade_emp/lti.hpp"

namespace cascade_emp
{

namespace
{

bool contains(const NodeSet& set, std::size_t v)
{
    return std::binary_search(set.begin(), set.end(), v);
}

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
        if (!trim(item).empty())
            parts.push_back(trim(item));
    return parts;
}

double parse_double(const std::string& s)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw StructuralError("EMP literal: '" + s + "' is not a number");
    return v;
}

std::map<std::size_t, double> assign_values(const NodeSet& nodes, const std::vector<double>& values,
                                            const char* name)
{
    std::map<std::size_t, double> out;
    if (values.size() == 1) {
        for (auto v : nodes)
            out[v] = values[0];
    } else if (values.size() == nodes.size()) {
        for (std::size_t k = 0; k < nodes.size(); ++k)
            out[nodes[k]] = values[k];
    } else {
        throw StructuralError(std::string("EMP literal: ") + name + " needs 1 or "
                              + std::to_string(nodes.size()) + " values");
    }
    return out;
}

} // namespace

void Emp::validate(std::size_t n) const
{
    auto check_set = [n](const NodeSet& set, const char* name) {
        if (!std::is_sorted(set.begin(), set.end())
            || std::adjacent_find(set.begin(), set.end()) != set.end())
            throw StructuralError(std::string(name) + " must be sorted and duplicate-free");
        for (auto v : set)
            if (v < 1 || v > n)
                throw StructuralError(std::string(name) + " node " + std::to_string(v)
                                      + " outside 1.." + std::to_string(n));
    };
    check_set(excited, "excited set");
    check_set(measured, "measured set");
    auto check_map = [](const NodeSet& set, const std::map<std::size_t, double>& values,
                        const char* name) {
        if (values.size() != set.size())
            throw StructuralError(std::string(name) + " must be defined exactly on its node set");
        for (auto v : set) {
            auto it = values.find(v);
            if (it == values.end())
                throw StructuralError(std::string(name) + " missing for node " + std::to_string(v));
            if (!(it->second > 0.0))
                throw StructuralError(std::string(name) + " must be positive at node "
                                      + std::to_string(v));
        }
    };
    check_map(excited, sigma2, "sigma2");
    check_map(measured, lambda, "lambda");
}

VarianceProfile VarianceProfile::uniform(std::size_t n, double sigma2, double lambda)
{
    return VarianceProfile{std::vector<double>(n, sigma2), std::vector<double>(n, lambda)};
}

Emp VarianceProfile::apply(const Pattern& pattern) const
{
    Emp emp{pattern.excited, pattern.measured, {}, {}};
    for (auto i : pattern.excited)
        emp.sigma2[i] = sigma2.at(i - 1);
    for (auto j : pattern.measured)
        emp.lambda[j] = lambda.at(j - 1);
    return emp;
}

bool VarianceProfile::is_uniform() const
{
    auto flat = [](const std::vector<double>& v) {
        return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
    };
    return flat(sigma2) && flat(lambda);
}

VarianceProfile VarianceProfile::scaled(double factor) const
{
    VarianceProfile out = *this;
    for (auto& v : out.sigma2)
        v *= factor;
    for (auto& v : out.lambda)
        v *= factor;
    return out;
}

bool is_minimal(const Pattern& p, std::size_t n)
{
    if (n < 2)
        return false;
    if (!contains(p.excited, 1) || !contains(p.measured, n))
        return false;
    if (p.excited == p.measured)
        return false;
    if (p.excited.size() + p.measured.size() != n)
        return false;
    for (std::size_t v = 1; v <= n; ++v)
        if (!contains(p.excited, v) && !contains(p.measured, v))
            return false;
    for (auto v : p.excited)
        if (v < 1 || v > n)
            return false;
    for (auto v : p.measured)
        if (v < 1 || v > n)
            return false;
    return true;
}

std::vector<Pattern> enumerate_minimal(std::size_t n)
{
    if (n < 2)
        throw DomainError("a cascade needs at least 2 nodes");
    if (n > 62)
        throw DomainError("too many nodes to enumerate");
    const std::size_t interior = n - 2;
    const std::size_t count = std::size_t{1} << interior;
    std::vector<Pattern> out;
    out.reserve(count);
    for (std::size_t code = 0; code < count; ++code) {
        Pattern p;
        p.excited.push_back(1);
        for (std::size_t k = 0; k < interior; ++k) {
            const std::size_t node = k + 2;
            if ((code >> k) & 1U)
                p.excited.push_back(node);
            else
                p.measured.push_back(node);
        }
        p.measured.push_back(n);
        out.push_back(std::move(p));
    }
    return out;
}

std::size_t canonical_index(const Pattern& pattern, std::size_t n)
{
    if (!is_minimal(pattern, n))
        throw DomainError("canonical_index: pattern " + to_string(pattern) + " is not minimal");
    std::size_t code = 0;
    for (auto v : pattern.excited)
        if (v >= 2 && v <= n - 1)
            code |= std::size_t{1} << (v - 2);
    return code;
}

Pattern mirror(const Pattern& p, std::size_t n)
{
    Pattern m;
    for (auto j : p.measured)
        m.excited.push_back(n - j + 1);
    for (auto i : p.excited)
        m.measured.push_back(n - i + 1);
    std::sort(m.excited.begin(), m.excited.end());
    std::sort(m.measured.begin(), m.measured.end());
    return m;
}

Emp mirror(const Emp& emp, std::size_t n)
{
    const Pattern p = mirror(emp.pattern(), n);
    Emp m{p.excited, p.measured, {}, {}};
    const double k = emp.sigma2.at(1) * emp.lambda.at(n);
    for (const auto& [j, lambda] : emp.lambda)
        m.sigma2[n - j + 1] = k / lambda;
    for (const auto& [i, sigma2] : emp.sigma2)
        m.lambda[n - i + 1] = k / sigma2;
    return m;
}

NodeSet direct_modules(const Pattern& p, std::size_t n)
{
    NodeSet out;
    for (auto i : p.excited)
        if (i + 1 <= n && contains(p.measured, i + 1))
            out.push_back(i);
    return out;
}

std::string to_string(const NodeSet& nodes)
{
    std::string s = "{";
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (k)
            s += ",";
        s += std::to_string(nodes[k]);
    }
    return s + "}";
}

std::string to_string(const Pattern& p)
{
    return "(" + to_string(p.excited) + "," + to_string(p.measured) + ")";
}

namespace
{

std::size_t parse_node(const std::string& text)
{
    const double v = parse_double(text);
    if (!(v >= 1.0) || v != std::floor(v))
        throw StructuralError("EMP literal: node '" + text + "' is not a positive integer");
    return static_cast<std::size_t>(v);
}

} // namespace

Emp parse_emp(const std::string& literal, std::size_t n, double default_sigma2, double default_lambda)
{
    NodeSet excited, measured;
    std::vector<double> sigma2, lambda;
    bool have_b = false, have_c = false;
    for (const auto& field : split(literal, ';')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos)
            throw StructuralError("EMP literal: field '" + field + "' lacks '='");
        const std::string key = trim(field.substr(0, eq));
        const auto values = split(field.substr(eq + 1), ',');
        if (key == "B" || key == "b") {
            for (const auto& v : values)
                excited.push_back(parse_node(v));
            have_b = true;
        } else if (key == "C" || key == "c") {
            for (const auto& v : values)
                measured.push_back(parse_node(v));
            have_c = true;
        } else if (key == "sigma2") {
            for (const auto& v : values)
                sigma2.push_back(parse_double(v));
        } else if (key == "lambda") {
            for (const auto& v : values)
                lambda.push_back(parse_double(v));
        } else {
            throw StructuralError("EMP literal: unknown key '" + key + "'");
        }
    }
    if (!have_b || !have_c)
        throw StructuralError("EMP literal needs both B=... and C=...");
    std::sort(excited.begin(), excited.end());
    std::sort(measured.begin(), measured.end());
    if (sigma2.empty())
        sigma2.push_back(default_sigma2);
    if (lambda.empty())
        lambda.push_back(default_lambda);
    Emp emp{excited, measured, assign_values(excited, sigma2, "sigma2"),
            assign_values(measured, lambda, "lambda")};
    emp.validate(n);
    return emp;
}

std::string format_emp(const Emp& emp)
{
    std::ostringstream out;
    out.precision(17);
    auto list = [&out](const auto& values, auto get) {
        bool first = true;
        for (const auto& v : values) {
            if (!first)
                out << ",";
            out << get(v);
            first = false;
        }
    };
    out << "B=";
    list(emp.excited, [](auto v) { return v; });
    out << ";C=";
    list(emp.measured, [](auto v) { return v; });
    out << ";sigma2=";
    list(emp.sigma2, [](const auto& kv) { return kv.second; });
    out << ";lambda=";
    list(emp.lambda, [](const auto& kv) { return kv.second; });
    return out.str();
}

} // namespace cascade_emp
