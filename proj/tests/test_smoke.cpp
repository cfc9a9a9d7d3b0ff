// Compile-coverage smoke test: pulls in every public header and
// exercises one trivial path per module.

#include <catch2/catch_amalgamated.hpp>

#include "leia/augment.hpp"
#include "leia/eval_runner.hpp"
#include "leia/evalkit.hpp"
#include "leia/interlang.hpp"
#include "leia/io.hpp"
#include "leia/pack.hpp"
#include "leia/pipeline.hpp"
#include "leia/records.hpp"
#include "leia/rng.hpp"
#include "leia/scorer.hpp"
#include "leia/stats.hpp"
#include "leia/tokenizer.hpp"
#include "leia/unicode.hpp"
#include "leia/util.hpp"
#include "leia/version.hpp"
#include "leia/wiki/dump.hpp"
#include "leia/wiki/wikitext.hpp"
#include "leia/xml.hpp"

TEST_CASE("headers link together") {
    CHECK(leia::uni::scalar_length("héllo") == 5);
    CHECK(leia::normalize_title("Paris#History") == "Paris");
    CHECK(leia::strategy_name(leia::Strategy::Right) == std::string("right"));
    CHECK(leia::mix_key(1, 2, 3) != leia::mix_key(1, 2, 4));
    CHECK(std::string(leia::kVersion) == "0.1.0");
}
