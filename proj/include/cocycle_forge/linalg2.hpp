#pragma once

#include <cmath>
#include <numbers>
#include <type_traits>

namespace cocycle_forge {

template <class T>
struct BasicVec2 {
    T x{0};
    T y{0};
};

// Row-major [[a, b], [c, d]].
template <class T>
struct BasicMat2 {
    T a{1}, b{0}, c{0}, d{1};

    static BasicMat2 identity() { return {T(1), T(0), T(0), T(1)}; }
    static BasicMat2 diag(const T& p, const T& q) { return {p, T(0), T(0), q}; }

    T det() const { return a * d - b * c; }
    T trace() const { return a + d; }
    BasicMat2 transpose() const { return {a, c, b, d}; }
    BasicMat2 inverse() const {
        T k = T(1) / det();
        return {d * k, -b * k, -c * k, a * k};
    }
};

template <class T>
BasicMat2<T> operator*(const BasicMat2<T>& l, const BasicMat2<T>& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
            l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
}

template <class T>
BasicVec2<T> operator*(const BasicMat2<T>& m, const BasicVec2<T>& v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}

template <class T>
BasicMat2<T> operator+(const BasicMat2<T>& l, const BasicMat2<T>& r) {
    return {l.a + r.a, l.b + r.b, l.c + r.c, l.d + r.d};
}

template <class T>
BasicMat2<T> operator-(const BasicMat2<T>& l, const BasicMat2<T>& r) {
    return {l.a - r.a, l.b - r.b, l.c - r.c, l.d - r.d};
}

template <class T>
BasicMat2<T> operator*(const T& s, const BasicMat2<T>& m) {
    return {s * m.a, s * m.b, s * m.c, s * m.d};
}

template <class T>
BasicVec2<T> operator*(const T& s, const BasicVec2<T>& v) {
    return {s * v.x, s * v.y};
}

template <class T>
BasicVec2<T> operator+(const BasicVec2<T>& l, const BasicVec2<T>& r) {
    return {l.x + r.x, l.y + r.y};
}

template <class T>
T dot(const BasicVec2<T>& u, const BasicVec2<T>& v) {
    return u.x * v.x + u.y * v.y;
}

template <class T>
T cross(const BasicVec2<T>& u, const BasicVec2<T>& v) {
    return u.x * v.y - u.y * v.x;
}

template <class T>
T norm(const BasicVec2<T>& v) {
    using std::hypot;
    using std::sqrt;
    if constexpr (std::is_same_v<T, double>) {
        return hypot(v.x, v.y);
    } else {
        return sqrt(v.x * v.x + v.y * v.y);
    }
}

template <class T>
BasicVec2<T> normalized(const BasicVec2<T>& v) {
    T n = norm(v);
    return {v.x / n, v.y / n};
}

// Spectral norm from the two half-sums (a+d, b-c) and (a-d, b+c). Same value as
// the tr(A^T A), det(A) closed form but without cancellation for large entries.
template <class T>
T op_norm_unchecked(const BasicMat2<T>& m) {
    using std::sqrt;
    T p = m.a + m.d, q = m.b - m.c, r = m.a - m.d, s = m.b + m.c;
    return (sqrt(p * p + q * q) + sqrt(r * r + s * s)) / T(2);
}

template <class T>
BasicMat2<T> rotation_t(const T& theta) {
    using std::cos;
    using std::sin;
    T c = cos(theta), s = sin(theta);
    return {c, -s, s, c};
}

template <class T>
BasicVec2<T> orthogonal(const BasicVec2<T>& v) {
    return {-v.y, v.x};
}

// |sin| of the angle between two lines spanned by nonzero vectors.
template <class T>
T sin_angle(const BasicVec2<T>& u, const BasicVec2<T>& v) {
    using std::abs;
    return abs(cross(u, v)) / (norm(u) * norm(v));
}

// Angle in (-pi/2, pi/2] of the rotation carrying line(u) onto line(v).
template <class T>
T signed_line_angle(const BasicVec2<T>& u, const BasicVec2<T>& v) {
    using std::atan2;
    T t = atan2(cross(u, v), dot(u, v));
    const T half_pi = atan2(T(1), T(0));
    const T pi = half_pi * 2;
    if (t > half_pi) t -= pi;
    if (t <= -half_pi) t += pi;
    return t;
}

using Vec2 = BasicVec2<double>;
using Mat2 = BasicMat2<double>;

// A line through the origin, stored as its angle in [0, pi).
class Dir {
public:
    Dir() = default;
    explicit Dir(double angle);
    static Dir of(const Vec2& v);

    double angle() const { return theta_; }
    Vec2 unit() const { return {std::cos(theta_), std::sin(theta_)}; }

    friend bool operator==(const Dir&, const Dir&) = default;

private:
    double theta_ = 0.0;
};

struct SingularData {
    double sigma_max = 1.0;
    double sigma_min = 1.0;
    Dir v_max;  // right singular directions
    Dir v_min;
    Dir u_max;  // left singular directions, u = A v / sigma
    Dir u_min;
    bool isotropic = false;
};

bool is_finite(const Mat2& m);
double op_norm(const Mat2& m);
Mat2 rotation(double theta);
SingularData singular_data(const Mat2& m);

// Angle between two lines, in [0, pi/2].
double angle_between(Dir d1, Dir d2);
// Rotation angle in (-pi/2, pi/2] taking `from` onto `to`.
double signed_angle(Dir from, Dir to);
Dir apply(const Mat2& m, Dir d);

double mix_ratio_threshold(double alpha2);
Dir mix_direction(const Mat2& m, Dir s, Dir u, double alpha2);
double norm_bound_E(double alpha1, double c_hat);

bool is_sl2(const Mat2& m, double tol = 1e-12);
double distance(const Mat2& l, const Mat2& r);  // op_norm(l - r)

// Left-accumulating product M <- next * M with the norm factored out every
// `cadence` steps; the represented matrix is exp(log_scale) * normalized.
class RenormalizedProduct {
public:
    explicit RenormalizedProduct(int cadence = 32) : cadence_(cadence) {}

    void push(const Mat2& next);
    void renormalize();

    double log_norm() const;
    double log_scale() const { return log_scale_; }
    const Mat2& normalized() const { return m_; }
    long steps() const { return steps_; }

private:
    Mat2 m_ = Mat2::identity();
    double log_scale_ = 0.0;
    long steps_ = 0;
    int cadence_;
};

}  // namespace cocycle_forge
