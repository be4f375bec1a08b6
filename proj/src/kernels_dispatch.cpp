#include "clickcfa/kernels.hpp"

#include <cstdlib>

#include "clickcfa/errors.hpp"

namespace clickcfa::kernels {

namespace {

struct Backend {
    const Ops* ops;
    std::string name;
};

Backend pick(const std::string& request) {
    if (request == "scalar") return {&scalar::ops(), "scalar"};
#ifdef CLICKCFA_X86
    if (request == "avx2") {
        if (!avx2::supported()) fail(ErrorKind::Usage, "avx2 kernels requested but CPU lacks avx2/fma");
        return {&avx2::ops(), "avx2"};
    }
#endif
#ifdef CLICKCFA_NEON
    if (request == "neon") return {&neon::ops(), "neon"};
#endif
    if (request == "auto" || request.empty()) {
#ifdef CLICKCFA_X86
        if (avx2::supported()) return {&avx2::ops(), "avx2"};
#endif
#ifdef CLICKCFA_NEON
        return {&neon::ops(), "neon"};
#endif
        return {&scalar::ops(), "scalar"};
    }
    fail(ErrorKind::Usage, "unknown kernel backend: " + request);
}

Backend& state() {
    static Backend current = [] {
        const char* env = std::getenv("CLICKCFA_KERNELS");
        return pick(env ? env : "auto");
    }();
    return current;
}

} // namespace

const Ops& active() { return *state().ops; }

const std::string& backend_name() { return state().name; }

void force_backend(const std::string& name) { state() = pick(name); }

} // namespace clickcfa::kernels
