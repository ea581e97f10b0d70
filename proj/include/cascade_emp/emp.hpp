#ifndef CASCADE_EMP_EMP_HPP
#define CASCADE_EMP_EMP_HPP

/** @file
 * Excitation and measurement patterns (EMPs) on an n-node cascade.
 *
 * An EMP is a set of excited nodes B and measured nodes C.  On a cascade a
 * minimal EMP excites node 1, measures node n, and puts every interior node
 * in exactly one of B or C, giving 2^{n-2} candidates.
 */

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace cascade_emp
{

/// Sorted, duplicate-free 1-based node (or module) indices.
using NodeSet = std::vector<std::size_t>;

struct Pattern
{
    NodeSet excited;
    NodeSet measured;

    friend bool operator==(const Pattern&, const Pattern&) = default;
};

/// Pattern plus excitation variances (on B) and noise variances (on C).
struct Emp
{
    NodeSet excited;
    NodeSet measured;
    std::map<std::size_t, double> sigma2;
    std::map<std::size_t, double> lambda;

    Pattern pattern() const { return Pattern{excited, measured}; }

    /// Throws StructuralError unless nodes lie in 1..n and the variance maps
    /// are keyed exactly by B and C with positive values.
    void validate(std::size_t n) const;

    friend bool operator==(const Emp&, const Emp&) = default;
};

/// Per-node variances: sigma2[i-1] applies if node i is excited, lambda[j-1]
/// if node j is measured.
struct VarianceProfile
{
    std::vector<double> sigma2;
    std::vector<double> lambda;

    static VarianceProfile uniform(std::size_t n, double sigma2, double lambda);
    std::size_t node_count() const noexcept { return sigma2.size(); }
    Emp apply(const Pattern& pattern) const;
    /// All sigma2 equal and all lambda equal.
    bool is_uniform() const;
    VarianceProfile scaled(double factor) const;
};

bool is_minimal(const Pattern& pattern, std::size_t n);
inline bool is_minimal(const Emp& emp, std::size_t n) { return is_minimal(emp.pattern(), n); }

/**
 * All minimal patterns in canonical order: the interior assignment runs as
 * a binary counter with node 2 as the least significant bit, bit set meaning
 * "excited".  n == 2 yields ({1},{2}); n < 2 throws DomainError.
 */
std::vector<Pattern> enumerate_minimal(std::size_t n);

/// Position of a minimal pattern in enumerate_minimal(n).
std::size_t canonical_index(const Pattern& pattern, std::size_t n);

/// Reflect the cascade end to end and swap excitation with measurement.
Pattern mirror(const Pattern& pattern, std::size_t n);

/**
 * Mirror of an EMP with variances.  Excitation at n-j+1 receives k/lambda_j
 * and noise at n-i+1 receives k/sigma2_i, with k = sigma2_1 * lambda_n, so
 * every SNR sigma2_i/lambda_j is carried to its reflected pair.  Under equal
 * variances this copies the values unchanged, and it is an involution.
 */
Emp mirror(const Emp& emp, std::size_t n);

/// Modules i with i in B and i+1 in C.
NodeSet direct_modules(const Pattern& pattern, std::size_t n);
inline NodeSet direct_modules(const Emp& emp, std::size_t n) { return direct_modules(emp.pattern(), n); }

/// "({1,2},{3,4})"
std::string to_string(const Pattern& pattern);
std::string to_string(const NodeSet& nodes);

/**
 * Parses "B=1,2;C=3,4" with optional "sigma2=..." and "lambda=..." lists.
 * A list holds either one value applied to every node of the set or one
 * value per node in ascending node order.  Missing lists take the defaults.
 */
Emp parse_emp(const std::string& literal, std::size_t n, double default_sigma2, double default_lambda);

/// Inverse of parse_emp.
std::string format_emp(const Emp& emp);

} // namespace cascade_emp

#endif
