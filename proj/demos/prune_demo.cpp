// Parses a checkout page, scores its interactive elements against keyword
// weights, and prints the pruned candidate block an agent would see.
#include <iostream>

#include <domprune/domprune.hpp>

int main() {
    const char* page = R"html(
<nav>
  <a href="/">Home</a>
  <a href="/orders">Order history</a>
  <a href="/help">Help center</a>
</nav>
<main>
  <h1>Checkout</h1>
  <form>
    <label for="email">Email address</label>
    <input id="email" type="email" placeholder="you@example.com">
    <label for="promo">Promo code</label>
    <input id="promo" name="promo-code">
    <select name="shipping">
      <option>Standard shipping</option>
      <option>Express shipping</option>
    </select>
    <button type="submit">Place order</button>
  </form>
  <a href="/privacy">Privacy notice</a>
</main>
)html";

    domprune::Document doc = domprune::parse_html(page, "checkout");
    auto elements = domprune::extract(doc);
    std::cout << "interactive elements: " << elements.size() << "\n\n";

    domprune::KeywordWeights weights = domprune::validate_weights({
        {"place order", 40},
        {"email", 25},
        {"shipping", 15},
        {"promo", 5},
    });

    auto scores = domprune::score_elements(elements, weights);
    domprune::CandidateList kept = domprune::top_n(scores, elements, 5);

    std::cout << "top candidates:\n" << domprune::serialize_candidates(kept) << "\n\n";
    std::cout << "reduction factor: "
              << domprune::reduction_ratio(static_cast<int>(elements.size()),
                                           static_cast<int>(kept.entries.size()))
              << "x\n\n";

    std::cout << "score breakdown for the best candidate:\n";
    for (const auto& r : scores) {
        if (r.element_id != kept.entries.front().element_id) continue;
        for (const auto& p : r.paths) {
            std::string where = p.attr_kind.name.empty() ? "visible text" : p.attr_kind.name;
            std::cout << "  keyword '" << p.keyword << "' via " << domprune::match_type_name(p.match_type)
                      << " match on " << where << " contributes " << p.contribution << "\n";
        }
    }
    return 0;
}
