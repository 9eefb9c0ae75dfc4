use wasm_bindgen::prelude::*;

#[wasm_bindgen(js_name = ahpPriorities)]
pub fn ahp_priorities(input: &str) -> Result<String, JsError> {
    super::ahp_priorities(input).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn staircase(input: &str) -> Result<String, JsError> {
    super::staircase(input).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareRules)]
pub fn compare_rules(input: &str) -> Result<String, JsError> {
    super::compare_rules(input).map_err(|e| JsError::new(&e))
}
