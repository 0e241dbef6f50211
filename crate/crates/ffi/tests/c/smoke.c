#include <stdio.h>
#include <string.h>
#include "ppvq.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        enum PpvqStatus st_ = (expr);                                      \
        if (st_ != PPVQ_OK) {                                              \
            const char *m_ = ppvq_last_error();                            \
            fprintf(stderr, "%s -> %d (%s)\n", #expr, st_, m_ ? m_ : "");  \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    const double p[4] = {0.04, 0.16, 0.16, 0.64};
    const uint32_t ls[4] = {1, 3, 2, 10};
    double h = 0.0, dh = 0.0;
    CHECK(ppvq_entropy(p, 4, &h));

    uint8_t header[64];
    size_t header_len = 0, d = 0, used = 0;
    uint32_t decoded[4], total = 0;
    CHECK(ppvq_header_encode(ls, 4, header, sizeof header, &header_len));
    CHECK(ppvq_header_decode(header, header_len, decoded, 4, &d, &total, &used));
    if (d != 4 || total != 16 || used != header_len || memcmp(decoded, ls, sizeof ls) != 0) {
        fprintf(stderr, "header mismatch\n");
        return 2;
    }

    PpvqSpread *spread = NULL;
    PpvqCoder *coder = NULL;
    CHECK(ppvq_spread_new(PPVQ_SPREAD_TUNED_SORTED, 0, ls, p, 4, &spread));
    CHECK(ppvq_automaton_delta_h(spread, p, 4, &dh));
    CHECK(ppvq_coder_new(spread, &coder));
    ppvq_spread_free(spread);

    uint32_t seq[256], back[256];
    for (int i = 0; i < 256; i++) seq[i] = (uint32_t)((i * 7 + i / 3) % 4);
    uint8_t bits[256];
    uint64_t nbits = 0;
    uint32_t state = 0;
    CHECK(ppvq_coder_encode(coder, seq, 256, bits, sizeof bits, &nbits, &state));
    CHECK(ppvq_coder_decode(coder, bits, nbits, state, back, 256));
    ppvq_coder_free(coder);
    if (memcmp(seq, back, sizeof seq) != 0) {
        fprintf(stderr, "symbol mismatch\n");
        return 2;
    }
    if (ppvq_entropy(p, 3, &h) != PPVQ_INVALID_DISTRIBUTION || ppvq_last_error() == NULL) {
        fprintf(stderr, "expected an error\n");
        return 3;
    }
    printf("ok %.6f %.6f %llu\n", h, dh, (unsigned long long)nbits);
    return 0;
}
