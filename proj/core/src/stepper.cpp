#include <algorithm>
#include <sstream>

#include "evoconv/matlaw.hpp"
#include "law_node.hpp"

namespace evoconv {

Instant Instant::diagonal(Eigen::VectorXcd d) {
    Instant i;
    i.diagonal_ = true;
    i.diag_ = std::move(d);
    return i;
}

Instant Instant::dense(Eigen::MatrixXcd m) {
    if (m.rows() != m.cols()) throw PreconditionError("Instant::dense: matrix must be square");
    Instant i;
    i.diagonal_ = false;
    i.dense_ = std::move(m);
    return i;
}

std::size_t Instant::width() const noexcept {
    return static_cast<std::size_t>(diagonal_ ? diag_.size() : dense_.rows());
}

Eigen::MatrixXcd Instant::to_dense() const {
    if (!diagonal_) return dense_;
    return diag_.asDiagonal();
}

void Instant::apply(std::span<const cplx> in, std::span<cplx> out) const {
    std::fill(out.begin(), out.end(), cplx(0.0));
    apply_add(in, out);
}

void Instant::apply_add(std::span<const cplx> in, std::span<cplx> out) const {
    const auto n = static_cast<Eigen::Index>(width());
    Eigen::Map<const Eigen::VectorXcd> x(in.data(), n);
    Eigen::Map<Eigen::VectorXcd> y(out.data(), n);
    if (diagonal_)
        y += diag_.cwiseProduct(x);
    else
        y.noalias() += dense_ * x;
}

Instant Instant::operator+(const Instant& other) const {
    if (width() != other.width()) throw PreconditionError("Instant: width mismatch");
    if (diagonal_ && other.diagonal_) return diagonal(diag_ + other.diag_);
    return dense(to_dense() + other.to_dense());
}

Instant Instant::operator*(const Instant& other) const {
    if (width() != other.width()) throw PreconditionError("Instant: width mismatch");
    if (diagonal_ && other.diagonal_) return diagonal(diag_.cwiseProduct(other.diag_));
    if (diagonal_) return dense(diag_.asDiagonal() * other.dense_);
    if (other.diagonal_) return dense(dense_ * other.diag_.asDiagonal());
    return dense(dense_ * other.dense_);
}

Instant Instant::scaled(cplx s) const {
    if (diagonal_) return diagonal(diag_ * s);
    return dense(dense_ * s);
}

namespace {

using detail::LawNode;
using Kind = MaterialLaw::Kind;

class StepperBase : public LawStepper {
public:
    StepperBase(const TimeGrid& grid, std::size_t width)
        : grid_(grid), width_(width), instant_(Instant::zero(width)), memory_(width, cplx(0.0)) {}
    const Instant& instant() const override { return instant_; }
    std::span<const cplx> memory() const override { return memory_; }

protected:
    TimeGrid grid_;
    std::size_t width_;
    std::size_t k_ = 0;
    Instant instant_;
    std::vector<cplx> memory_;
};

/// Memoryless law with a constant instant.
class ConstantStepper final : public StepperBase {
public:
    ConstantStepper(const TimeGrid& grid, Instant d) : StepperBase(grid, d.width()) { instant_ = std::move(d); }
    void begin(std::size_t k) override { k_ = k; }
    void commit(std::span<const cplx>) override {}
    bool constant_instant() const override { return true; }
};

class TimeMulStepper final : public StepperBase {
public:
    TimeMulStepper(const TimeGrid& grid, std::size_t width, const LawNode& n) : StepperBase(grid, width), node_(n) {}
    void begin(std::size_t k) override {
        k_ = k;
        if (node_.kind == Kind::TimeMul) {
            instant_ = Instant::identity(width_).scaled(node_.fn_t(grid_.t(k)));
        } else {
            Eigen::VectorXcd d(static_cast<Eigen::Index>(width_));
            for (std::size_t c = 0; c < width_; ++c) d(static_cast<Eigen::Index>(c)) = node_.fn_tc(grid_.t(k), c);
            instant_ = Instant::diagonal(std::move(d));
        }
    }
    void commit(std::span<const cplx>) override {}
    bool constant_instant() const override { return node_.time_invariant; }

private:
    const LawNode& node_;
};

class ConvolutionStepper final : public StepperBase {
public:
    ConvolutionStepper(const TimeGrid& grid, std::size_t width, std::vector<cplx> kappa)
        : StepperBase(grid, width), kappa_(std::move(kappa)) {
        instant_ = Instant::identity(width).scaled(grid.dt() * kappa_[0]);
        history_.reserve(grid.steps() * width);
    }
    void begin(std::size_t k) override {
        k_ = k;
        std::fill(memory_.begin(), memory_.end(), cplx(0.0));
        for (std::size_t j = 0; j < k; ++j) {
            const cplx c = kappa_[k - j] * grid_.dt();
            if (c == cplx(0.0)) continue;
            const cplx* w = history_.data() + j * width_;
            for (std::size_t i = 0; i < width_; ++i) memory_[i] += c * w[i];
        }
    }
    void commit(std::span<const cplx> w) override { history_.insert(history_.end(), w.begin(), w.end()); }
    bool constant_instant() const override { return true; }

private:
    std::vector<cplx> kappa_;
    std::vector<cplx> history_;
};

class IntegratorStepper final : public StepperBase {
public:
    IntegratorStepper(const TimeGrid& grid, std::size_t width) : StepperBase(grid, width), sum_(width, cplx(0.0)) {
        instant_ = Instant::identity(width).scaled(grid.dt());
    }
    void begin(std::size_t k) override {
        k_ = k;
        for (std::size_t i = 0; i < width_; ++i) memory_[i] = grid_.dt() * sum_[i];
    }
    void commit(std::span<const cplx> w) override {
        for (std::size_t i = 0; i < width_; ++i) sum_[i] += w[i];
    }
    bool constant_instant() const override { return true; }

private:
    std::vector<cplx> sum_;
};

class DelayStepper final : public StepperBase {
public:
    DelayStepper(const TimeGrid& grid, std::size_t width, std::size_t delay)
        : StepperBase(grid, width), delay_(delay) {
        history_.reserve(grid.steps() * width);
    }
    void begin(std::size_t k) override {
        k_ = k;
        if (k >= delay_) {
            const cplx* w = history_.data() + (k - delay_) * width_;
            std::copy(w, w + width_, memory_.begin());
        } else {
            std::fill(memory_.begin(), memory_.end(), cplx(0.0));
        }
    }
    void commit(std::span<const cplx> w) override { history_.insert(history_.end(), w.begin(), w.end()); }
    bool constant_instant() const override { return true; }

private:
    std::size_t delay_;
    std::vector<cplx> history_;
};

class SumStepper final : public StepperBase {
public:
    SumStepper(const TimeGrid& grid, std::size_t width, std::vector<std::unique_ptr<LawStepper>> terms)
        : StepperBase(grid, width), terms_(std::move(terms)) {
        constant_ = std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t->constant_instant(); });
    }
    void begin(std::size_t k) override {
        k_ = k;
        std::fill(memory_.begin(), memory_.end(), cplx(0.0));
        for (auto& t : terms_) {
            t->begin(k);
            const auto r = t->memory();
            for (std::size_t i = 0; i < width_; ++i) memory_[i] += r[i];
        }
        if (!constant_ || !have_instant_) {
            Instant d = terms_.front()->instant();
            for (std::size_t i = 1; i < terms_.size(); ++i) d = d + terms_[i]->instant();
            instant_ = std::move(d);
            have_instant_ = true;
        }
    }
    void commit(std::span<const cplx> w) override {
        for (auto& t : terms_) t->commit(w);
    }
    bool constant_instant() const override { return constant_; }

private:
    std::vector<std::unique_ptr<LawStepper>> terms_;
    bool constant_ = false;
    bool have_instant_ = false;
};

/// factors[0] * factors[1] * ...; the last factor sees the input first.
class ProductStepper final : public StepperBase {
public:
    ProductStepper(const TimeGrid& grid, std::size_t width, std::vector<std::unique_ptr<LawStepper>> factors)
        : StepperBase(grid, width), factors_(std::move(factors)), stage_(width), next_(width) {
        constant_ = std::all_of(factors_.begin(), factors_.end(), [](const auto& f) { return f->constant_instant(); });
    }
    void begin(std::size_t k) override {
        k_ = k;
        for (auto& f : factors_) f->begin(k);
        const std::size_t m = factors_.size();
        auto last = factors_[m - 1]->memory();
        std::copy(last.begin(), last.end(), memory_.begin());
        for (std::size_t i = m - 1; i-- > 0;) {
            factors_[i]->instant().apply(memory_, next_);
            const auto r = factors_[i]->memory();
            for (std::size_t c = 0; c < width_; ++c) next_[c] += r[c];
            memory_.swap(next_);
        }
        if (!constant_ || !have_instant_) {
            Instant d = factors_[0]->instant();
            for (std::size_t i = 1; i < m; ++i) d = d * factors_[i]->instant();
            instant_ = std::move(d);
            have_instant_ = true;
        }
    }
    void commit(std::span<const cplx> w) override {
        std::copy(w.begin(), w.end(), stage_.begin());
        for (std::size_t i = factors_.size(); i-- > 0;) {
            auto& f = *factors_[i];
            if (i > 0) {
                f.instant().apply(stage_, next_);
                const auto r = f.memory();
                for (std::size_t c = 0; c < width_; ++c) next_[c] += r[c];
            }
            f.commit(stage_);
            if (i > 0) stage_.swap(next_);
        }
    }
    bool constant_instant() const override { return constant_; }

private:
    std::vector<std::unique_ptr<LawStepper>> factors_;
    std::vector<cplx> stage_;
    std::vector<cplx> next_;
    bool constant_ = false;
    bool have_instant_ = false;
};

Instant block_instant(std::size_t width, std::size_t offset, std::size_t size,
                      const std::function<void(const cplx*, cplx*)>& f) {
    if (offset + size > width) throw PreconditionError("MaterialLaw::stepper: block exceeds field width");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(width));
    std::vector<cplx> e(size, cplx(0.0)), out(size);
    for (std::size_t j = 0; j < size; ++j) {
        e[j] = 1.0;
        f(e.data(), out.data());
        e[j] = 0.0;
        for (std::size_t i = 0; i < size; ++i)
            m(static_cast<Eigen::Index>(offset + i), static_cast<Eigen::Index>(offset + j)) = out[i];
    }
    return Instant::dense(std::move(m));
}

std::unique_ptr<LawStepper> make_stepper(const LawNode& n, const TimeGrid& g, std::size_t width) {
    switch (n.kind) {
        case Kind::Zero:
            return std::make_unique<ConstantStepper>(g, Instant::zero(width));
        case Kind::Identity:
            return std::make_unique<ConstantStepper>(g, Instant::identity(width));
        case Kind::SpaceMul: {
            if (n.space.size() != width) throw PreconditionError("MaterialLaw::stepper: space_mul width mismatch");
            Eigen::VectorXcd d = Eigen::Map<const Eigen::VectorXcd>(n.space.data(), static_cast<Eigen::Index>(width));
            return std::make_unique<ConstantStepper>(g, Instant::diagonal(std::move(d)));
        }
        case Kind::TimeMul:
        case Kind::SpaceTimeMul:
            return std::make_unique<TimeMulStepper>(g, width, n);
        case Kind::TimeConvolution: {
            std::vector<cplx> kappa(g.steps());
            for (std::size_t k = 0; k < g.steps(); ++k) kappa[k] = n.fn_t(g.t(k));
            return std::make_unique<ConvolutionStepper>(g, width, std::move(kappa));
        }
        case Kind::Hardy:
            return std::make_unique<ConvolutionStepper>(g, width, detail::hardy_kernel(n, g));
        case Kind::D0Inverse:
            return std::make_unique<IntegratorStepper>(g, width);
        case Kind::Shift: {
            const long s = shift_steps(g, n.delay);
            if (s < 0) {
                std::ostringstream msg;
                msg << "MaterialLaw::stepper: " << n.label << " is not causal (it reads " << -s << " steps ahead)";
                throw PreconditionError(msg.str());
            }
            if (s == 0) return std::make_unique<ConstantStepper>(g, Instant::identity(width));
            return std::make_unique<DelayStepper>(g, width, static_cast<std::size_t>(s));
        }
        case Kind::MeanProjection:
            return std::make_unique<ConstantStepper>(
                g, block_instant(width, n.offset, n.size, [&](const cplx* in, cplx* out) {
                    cplx mean = 0.0;
                    for (std::size_t i = 0; i < n.size; ++i) mean += in[i];
                    mean /= static_cast<double>(n.size);
                    for (std::size_t i = 0; i < n.size; ++i) out[i] = in[i] - mean;
                }));
        case Kind::CompressedInverse:
            return std::make_unique<ConstantStepper>(
                g, block_instant(width, n.offset, n.size,
                                 [&](const cplx* in, cplx* out) { detail::compressed_inverse_block(n.b, in, out); }));
        case Kind::Sum: {
            std::vector<std::unique_ptr<LawStepper>> terms;
            for (const auto& c : n.children) terms.push_back(c.stepper(g, width));
            return std::make_unique<SumStepper>(g, width, std::move(terms));
        }
        case Kind::Product: {
            std::vector<std::unique_ptr<LawStepper>> factors;
            for (const auto& c : n.children) factors.push_back(c.stepper(g, width));
            return std::make_unique<ProductStepper>(g, width, std::move(factors));
        }
    }
    throw Error("MaterialLaw::stepper: unknown kind");
}

}  // namespace

std::unique_ptr<LawStepper> MaterialLaw::stepper(const TimeGrid& grid, std::size_t width) const {
    return make_stepper(*node_, grid, width);
}

}  // namespace evoconv
