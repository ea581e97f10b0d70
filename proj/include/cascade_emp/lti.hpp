#ifndef CASCADE_EMP_LTI_HPP
#define CASCADE_EMP_LTI_HPP

/** @file
 * Discrete-time SISO transfer functions in the forward shift operator q,
 * and the three parametrized module families used on cascade edges.
 */

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cascade_emp
{

/// Polynomial coefficients in descending powers of q.
using Coefficients = std::vector<double>;

/// Wrong parameter count, improper filter, or malformed coefficients.
class StructuralError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A filter or module whose poles are not strictly inside the unit circle.
class UnstableError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Index arguments outside the valid range (e.g. a reverse path).
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

/**
 * One proper rational factor num(q)/den(q) with a monic denominator.
 * Sections are the unit of filtering: a TransferFunction is a product of
 * sections and is evaluated by running them in sequence.
 */
struct Section
{
    Coefficients num;
    Coefficients den;
};

/**
 * Rational discrete-time SISO filter B(q)/A(q).
 *
 * The filter is stored in factored form, as the product of the sections it
 * was built from, together with the expanded numerator and denominator.
 * Series products concatenate sections without any pole-zero cancellation.
 * Poles are computed once per section and carried through products, so the
 * spectral radius of a long cascade is known without re-rooting a high
 * degree polynomial.
 *
 * Instances are immutable after construction.
 */
class TransferFunction
{
public:
    /// Normalizes so the leading denominator coefficient is 1.  Throws
    /// StructuralError for an improper filter, an empty or zero-leading
    /// denominator, or an all-zero numerator (use zero() for that).
    TransferFunction(Coefficients numerator, Coefficients denominator);

    static TransferFunction unit();
    static TransferFunction zero();
    /// q^{-k}.
    static TransferFunction delay(std::size_t k);

    const Coefficients& numerator() const noexcept { return num_; }
    const Coefficients& denominator() const noexcept { return den_; }
    std::span<const Section> sections() const noexcept { return sections_; }
    const std::vector<std::complex<double>>& poles() const noexcept { return poles_; }

    /// Largest pole magnitude; zero for FIR filters.
    double spectral_radius() const noexcept { return radius_; }
    std::size_t order() const noexcept { return den_.size() - 1; }
    bool is_zero() const noexcept { return zero_; }
    bool is_unit() const noexcept;

    /// G(z) for complex z (z = e^{i w} gives the frequency response).
    std::complex<double> evaluate(std::complex<double> z) const;

    /// Causal filtering with zero initial conditions; out.size() samples
    /// are produced, reading in[t] as zero past the end of the input.
    void filter(std::span<const double> in, std::span<double> out) const;
    std::vector<double> filter(std::span<const double> in) const;

    friend TransferFunction series(const TransferFunction& a,
                                   const TransferFunction& b);

private:
    TransferFunction() = default;
    void rebuild_expanded();

    std::vector<Section> sections_;
    Coefficients num_;
    Coefficients den_;
    std::vector<std::complex<double>> poles_;
    double radius_ = 0.0;
    bool zero_ = false;
};

/// Product a(q)·b(q); unit factors are dropped, zero absorbs.
TransferFunction series(const TransferFunction& a, const TransferFunction& b);

/// Default stability margin on the pole magnitude.
inline constexpr double kStabilityMargin = 1.0 - 1e-9;

/// True iff every pole has magnitude below @p margin.
bool is_stable(const TransferFunction& tf, double margin = kStabilityMargin);

/// Roots of a polynomial given in descending powers.
std::vector<std::complex<double>> polynomial_roots(const Coefficients& poly);

/// Descending-power polynomial product.
Coefficients poly_multiply(const Coefficients& a, const Coefficients& b);

struct ImpulseResponse
{
    std::vector<double> taps;
    /// False when max_len was reached before the tail bound held.
    bool converged = true;
};

inline constexpr std::size_t kDefaultMaxTaps = 4096;
inline constexpr double kDefaultTailTolerance = 1e-12;

/**
 * Impulse response h(0..L-1) of a stable filter.
 *
 * FIR filters (all poles at the origin) are returned exactly, trailing
 * exact zeros trimmed.  Otherwise h is computed over a growing horizon
 * until a trailing window spanning the filter order plus a 100-fold decay
 * of the slowest mode lies entirely below @p tail_tol; L is then one past
 * the last tap with |h| >= tail_tol.  Throws UnstableError for an unstable
 * filter.
 */
ImpulseResponse impulse_response(const TransferFunction& tf,
                                 std::size_t max_len = kDefaultMaxTaps,
                                 double tail_tol = kDefaultTailTolerance);

/// Module families found on cascade edges.
enum class ModuleFamily
{
    Fir,         ///< sum_k g_k q^{-k}, theta = [g_0 .. g_M]
    FirstOrder,  ///< b / (q + a), theta = [a, b]
    SecondOrder, ///< (t1 q + t2) / (q^2 + t3 q + t4)
};

std::string to_string(ModuleFamily family);
/// Accepts "fir", "first_order", "second_order" (and a few aliases).
ModuleFamily parse_family(const std::string& name);

/// Parameter count required by the family; 0 means "any positive" (FIR).
std::size_t family_parameter_count(ModuleFamily family) noexcept;

/// Maps a parameter vector to its transfer function.  Checks the count,
/// not stability.
TransferFunction realize(ModuleFamily family, std::span<const double> theta);

/**
 * A parametrized module: family plus parameter vector, with its realized
 * transfer function.  Construction throws StructuralError on a wrong
 * parameter count and UnstableError when the realization is not stable.
 */
class ParamModule
{
public:
    ParamModule(ModuleFamily family, std::vector<double> theta);

    ModuleFamily family() const noexcept { return family_; }
    std::span<const double> theta() const noexcept { return theta_; }
    std::size_t parameter_count() const noexcept { return theta_.size(); }
    const TransferFunction& transfer_function() const noexcept { return tf_; }

    ParamModule with_theta(std::vector<double> theta) const;

    friend bool operator==(const ParamModule& a, const ParamModule& b)
    {
        return a.family_ == b.family_ && a.theta_ == b.theta_;
    }

private:
    ModuleFamily family_;
    std::vector<double> theta_;
    TransferFunction tf_;
};

inline const TransferFunction& realize(const ParamModule& module)
{
    return module.transfer_function();
}

/**
 * dG/dtheta_m as transfer functions, one per parameter.  FIR taps give
 * q^{-k}; for B/A families the numerator coefficient of q^j gives q^j/A
 * and the denominator coefficient of q^j gives -q^j B/A^2.
 */
std::vector<TransferFunction> param_jacobian(const ParamModule& module);

} // namespace cascade_emp

#endif
